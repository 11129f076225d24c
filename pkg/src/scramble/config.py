"""Experiment configuration: flat key = value text with namespaces.

Three namespaces (physics., numerics., output.) plus the bare ``method``
key.  Unknown keys are rejected, every physics field is echoed into
output metadata, and the canonical serialization is byte-stable so
configs round-trip exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

METHODS = ("ed-quench", "ed-kick", "twa", "dtwa", "cumulant", "hp",
           "classical", "poincare", "lyapunov", "spectrum", "full-ed")


class ConfigError(ValueError):
    """Malformed configuration: unknown key, bad value, unknown method."""


@dataclass
class PhysicsConfig:
    N: int = 100
    J: float = 1.0
    h0: float = 0.0
    hf: float = 2.0
    K: float = 0.0
    tau: float = 1.0
    alpha: float = 0.0


@dataclass
class NumericsConfig:
    dt: float = 1e-3
    t_max: float = 10.0
    n_times: int = 200
    n_samples: int = 1000
    n_periods: int = 100
    seed: int = 12345
    thread_count: int = 1


@dataclass
class OutputConfig:
    directory: str = "out"
    formats: str = "csv"


@dataclass
class ExperimentConfig:
    method: str = "ed-quench"
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        if self.method not in METHODS and not self.method.startswith("figure:"):
            raise ConfigError(f"unknown method {self.method!r}; "
                              f"choose one of {', '.join(METHODS)}")

    # ---- flat key access -------------------------------------------------

    _SECTIONS = {"physics": PhysicsConfig, "numerics": NumericsConfig,
                 "output": OutputConfig}

    def set_key(self, key: str, raw: str):
        if key == "method":
            self.method = raw
            if raw not in METHODS and not raw.startswith("figure:"):
                raise ConfigError(f"unknown method {raw!r}")
            return
        section, _, name = key.partition(".")
        if section not in self._SECTIONS or not name:
            raise ConfigError(f"unknown config key {key!r}")
        target = getattr(self, section)
        proto = {f.name: f.type for f in fields(target)}
        if name not in proto:
            raise ConfigError(f"unknown config key {key!r}")
        current = getattr(target, name)
        try:
            if isinstance(current, bool):
                value = raw.lower() in ("1", "true", "yes")
            elif isinstance(current, int):
                value = int(raw)
            elif isinstance(current, float):
                value = float(raw)
            else:
                value = raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
        setattr(target, name, value)

    def flat_items(self):
        yield "method", self.method
        for section in ("physics", "numerics", "output"):
            obj = getattr(self, section)
            for f in fields(obj):
                yield f"{section}.{f.name}", getattr(obj, f.name)

    def canonical_text(self) -> str:
        lines = []
        for key, value in sorted(self.flat_items()):
            if isinstance(value, float):
                lines.append(f"{key} = {value:.17g}")
            else:
                lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    def metadata(self) -> dict:
        """Every physics field plus method/seed, for record headers."""
        meta = {"method": self.method,
                "seed": self.numerics.seed}
        for f in fields(self.physics):
            meta[f.name] = getattr(self.physics, f.name)
        return meta


def parse_config(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig()
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        cfg.set_key(key.strip(), raw.strip())
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
