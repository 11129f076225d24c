"""Experiment orchestration: dispatch, file emission, manifests, figures.

Each run writes one CSV per produced TimeSeriesRecord plus a JSON manifest
carrying the canonical config, its hash, timestamps and per-file
checksums.  CSV bodies contain no timestamps, so identical configs
reproduce byte-identical files.  Writes are atomic (temp file + rename).
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .collective import (build_floquet, build_lmg_hamiltonian,
                         quench_initial_state)
from .classical import (classical_energy, classical_ground_state,
                        integrate_flow, lyapunov_benettin, poincare_section,
                        tangent_poisson_bracket)
from .closures import cumulant_closure_c, holstein_primakoff_c
from .config import ConfigError, ExperimentConfig
from .dynamics import (evolve_kicked, evolve_quench, magnetization_record,
                       qfi_record, square_commutator)
from .entanglement import BlockPartition, tmi
from .fitting import fit_exponential, fit_power_law
from .fulled import (FullState, build_longrange_hamiltonian, full_evolve,
                     full_magnetization, full_qfi_record,
                     full_square_commutator, min_tmi)
from .records import TimeSeriesRecord
from .semiclassics import (collective_couplings, dtwa_evolve,
                           dtwa_magnetization, dtwa_qfi, dtwa_sample,
                           dtwa_square_commutator, twa_observable,
                           twa_sample, twa_square_commutator)
from .spectral import floquet_spectrum, level_spacing_ratio


def thread_budget(config: ExperimentConfig | None = None) -> int:
    env = os.environ.get("SCRAMBLE_THREADS")
    if env:
        return max(1, int(env))
    if config is not None:
        return max(1, config.numerics.thread_count)
    return 1


@dataclass
class RunManifest:
    config_hash: str
    config_text: str
    code_version: str
    seed: int
    started: float
    finished: float
    checksums: dict

    def to_json(self) -> str:
        return json.dumps({
            "config_hash": self.config_hash,
            "config": self.config_text,
            "code_version": self.code_version,
            "seed": self.seed,
            "started": self.started,
            "finished": self.finished,
            "checksums": self.checksums,
        }, indent=2, sort_keys=True)


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _default_tmi_partition(N: int) -> BlockPartition:
    a = 1
    b = max(1, N // 10)
    c = max(1, N // 5)
    while a + b + c >= N:
        c = max(1, c // 2)
        b = max(1, b // 2)
        if a + 1 + 1 >= N:
            raise ConfigError(f"system too small for a TMI partition: N={N}")
    return BlockPartition(a, b, c)


# ------------------------------------------------------- method runs ----

def ed_quench_records(N, J, h0, hf, times, tmi_partition=None, metadata=None):
    """Exact-quench bundle: m_z, square commutator, QFI, TMI records."""
    meta = dict(metadata or {})
    psi0 = quench_initial_state(N, J, h0)
    H = build_lmg_hamiltonian(N, J, hf)
    states = evolve_quench(psi0, H, times)
    part = tmi_partition or _default_tmi_partition(N)
    tmi_vals = [tmi(s, part) for s in states]
    meta_tmi = dict(meta, n_a=part.n_a, n_b=part.n_b, n_c=part.n_c)
    return {
        "mz": magnetization_record(states, times, meta),
        "cqt": square_commutator(psi0, H, times, meta),
        "qfi": qfi_record(states, times, meta),
        "tmi": TimeSeriesRecord("tmi", times, tmi_vals, meta_tmi),
    }


def ed_kick_records(N, J, h, K, tau, n_periods, tmi_partition=None,
                    metadata=None):
    meta = dict(metadata or {})
    from .collective import DickeState
    psi0 = DickeState.polarized(N)
    U = build_floquet(N, J, h, K, tau)
    states = evolve_kicked(psi0, U, n_periods)
    times = np.arange(n_periods + 1) * tau
    part = tmi_partition or _default_tmi_partition(N)
    tmi_vals = [tmi(s, part) for s in states]
    meta_tmi = dict(meta, n_a=part.n_a, n_b=part.n_b, n_c=part.n_c)
    periods = np.arange(n_periods + 1, dtype=float)
    return {
        "mz": magnetization_record(states, times, meta),
        "cqt": square_commutator(psi0, U, periods, meta),
        "qfi": qfi_record(states, times, meta),
        "tmi": TimeSeriesRecord("tmi", times, tmi_vals, meta_tmi),
    }


def _run_method(cfg: ExperimentConfig) -> dict:
    p, n = cfg.physics, cfg.numerics
    meta = cfg.metadata()
    times = np.linspace(0.0, n.t_max, n.n_times + 1)
    if cfg.method == "ed-quench":
        return ed_quench_records(p.N, p.J, p.h0, p.hf, times, metadata=meta)
    if cfg.method == "ed-kick":
        return ed_kick_records(p.N, p.J, p.hf, p.K, p.tau, n.n_periods,
                               metadata=meta)
    if cfg.method == "twa":
        samples = twa_sample(p.N, n.n_samples, n.seed)
        times_pos = times[times > 0]
        recs = {
            "mz": twa_observable(samples, p.J, p.hf, times, K=p.K, tau=p.tau,
                                 dt=n.dt, metadata=meta),
            "cqt": twa_square_commutator(samples, p.N, p.J, p.hf, times_pos,
                                         K=p.K, tau=p.tau, dt=n.dt,
                                         metadata=meta),
        }
        return recs
    if cfg.method == "dtwa":
        ens = dtwa_sample(p.N, n.n_samples, n.seed)
        coup = collective_couplings(p.N, p.J) if p.alpha == 0.0 else None
        if coup is None:
            from .fulled import coupling_matrix
            coup = coupling_matrix(p.N, p.alpha, p.J)
        grid = _dt_aligned_times(times, n.dt)
        snaps = dtwa_evolve(ens, coup, p.hf, grid, K=p.K, tau=p.tau,
                            dt=n.dt, metadata=meta)
        recs = {"mz": dtwa_magnetization(snaps), "qfi": dtwa_qfi(snaps)}
        recs["cqt"] = dtwa_square_commutator(ens, coup, p.hf,
                                             grid[grid > 0], K=p.K,
                                             tau=p.tau, dt=n.dt,
                                             metadata=meta)
        return recs
    if cfg.method == "cumulant":
        return {"cqt": cumulant_closure_c(p.N, p.J, p.hf, t_max=n.t_max,
                                          dt=n.dt, metadata=meta)}
    if cfg.method == "hp":
        return {"cqt": holstein_primakoff_c(p.N, p.J, p.hf, t_max=n.t_max,
                                            dt=n.dt, metadata=meta)}
    if cfg.method == "classical":
        m0 = classical_ground_state(p.J, p.h0)
        ts, traj = integrate_flow(m0, p.J, p.hf, n.t_max, n.dt,
                                  n_out=n.n_times)
        energy = classical_energy(traj, p.J, p.hf)
        bracket = tangent_poisson_bracket(m0, p.J, p.hf, ts, dt=n.dt,
                                          metadata=meta)
        return {
            "mz": TimeSeriesRecord("mz", ts, traj[:, 2], meta),
            "energy": TimeSeriesRecord("energy", ts, energy, meta),
            "bracket": bracket,
        }
    if cfg.method == "poincare":
        seeds = _poincare_seeds(n.seed)
        clouds = poincare_section(seeds, n.n_periods, p.J, p.hf, p.K, p.tau,
                                  dt=n.dt)
        recs = {}
        for i, cloud in enumerate(clouds):
            idx = np.arange(cloud.shape[0], dtype=float)
            recs[f"poincare_Q_seed{i}"] = TimeSeriesRecord(
                f"poincare_Q_seed{i}", idx, cloud[:, 0], meta)
            recs[f"poincare_P_seed{i}"] = TimeSeriesRecord(
                f"poincare_P_seed{i}", idx, cloud[:, 1], meta)
        return recs
    if cfg.method == "lyapunov":
        m0 = _poincare_seeds(n.seed)[0]
        lam, running = lyapunov_benettin(m0, p.J, p.hf, p.K, p.tau,
                                         n.n_periods, dt=n.dt, seed=n.seed)
        ts = (np.arange(len(running)) + 1) * (p.tau if p.K else 1.0)
        meta_l = dict(meta, lyapunov=lam)
        return {"lyapunov_running": TimeSeriesRecord("lyapunov_running",
                                                     ts, running, meta_l)}
    if cfg.method == "spectrum":
        U = build_floquet(p.N, p.J, p.hf, p.K, p.tau)
        spec = floquet_spectrum(U, p.N, p.tau)
        recs = {}
        for label, name in ((+1, "even"), (-1, "odd")):
            mus = spec.sector(label)
            meta_s = dict(meta, sector=name,
                          r_mean=level_spacing_ratio(spec, label))
            recs[f"quasienergies_{name}"] = TimeSeriesRecord(
                f"quasienergies_{name}",
                np.arange(len(mus), dtype=float), mus, meta_s)
        return recs
    if cfg.method == "full-ed":
        psi0 = FullState.polarized(p.N)
        H = build_longrange_hamiltonian(p.N, p.alpha, p.J, p.hf)
        states = full_evolve(psi0, H, times)
        tmi_vals = [min_tmi(s) for s in states]
        return {
            "mz": full_magnetization(states, times, meta),
            "cqt": full_square_commutator(psi0, H, times, meta),
            "qfi": full_qfi_record(states, times, meta),
            "tmi_min": TimeSeriesRecord("tmi_min", times, tmi_vals, meta),
        }
    raise ConfigError(f"unknown method {cfg.method!r}")


def _dt_aligned_times(times, dt):
    grid = np.unique(np.rint(times / dt).astype(np.int64)) * dt
    return grid[grid >= 0]


def _poincare_seeds(seed, count=4):
    rng = np.random.default_rng(seed)
    seeds = [np.array([0.0, 0.0, 1.0])]
    for _ in range(count - 1):
        v = rng.normal(size=3)
        seeds.append(v / np.linalg.norm(v))
    return np.array(seeds)


# ------------------------------------------------------------- driver ----

def run(config: ExperimentConfig, out_dir: str | None = None) -> RunManifest:
    """Execute one experiment and write its outputs and manifest."""
    started = time.time()
    if config.method.startswith("figure:"):
        records = run_figure(config.method.split(":", 1)[1], config)
    else:
        records = _run_method(config)
    out = out_dir or config.output.directory
    checksums = {}
    for name, rec in sorted(records.items()):
        text = rec.to_csv()
        path = os.path.join(out, f"{name}.csv")
        _atomic_write(path, text)
        checksums[f"{name}.csv"] = hashlib.sha256(
            text.encode("utf-8")).hexdigest()
    text = config.canonical_text()
    manifest = RunManifest(
        config_hash=hashlib.sha256(text.encode("utf-8")).hexdigest(),
        config_text=text,
        code_version=__version__,
        seed=config.numerics.seed,
        started=started,
        finished=time.time(),
        checksums=checksums,
    )
    _atomic_write(os.path.join(out, "manifest.json"), manifest.to_json())
    return manifest


# ------------------------------------------------------------ figures ----

def _figure_comparison(cfg):
    """Entanglement vs scrambling after a regular quench (N=100, hf=2)."""
    N = cfg.physics.N or 100
    times = np.linspace(0.0, 400.0, 2001)
    return ed_quench_records(N, 1.0, 0.0, 2.0, times,
                             metadata={"figure": "comparison"})


def _figure_phase_space(cfg):
    recs = {}
    for K, tag in ((0.2, "regular"), (20.0, "chaotic")):
        sub = ExperimentConfig(method="poincare")
        sub.physics.hf, sub.physics.K, sub.physics.tau = 2.0, K, 1.0
        sub.numerics.n_periods = 2000
        sub.numerics.dt = 0.01
        sub.numerics.seed = cfg.numerics.seed
        for name, rec in _run_method(sub).items():
            recs[f"{tag}_{name}"] = rec
    return recs


def _figure_ratio(cfg):
    N = max(cfg.physics.N, 400)
    ks = (0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)

    def one(K):
        U = build_floquet(N, 1.0, 2.0, K, 1.0)
        spec = floquet_spectrum(U, N, 1.0)
        return level_spacing_ratio(spec, +1)

    with ThreadPoolExecutor(max_workers=thread_budget(cfg)) as pool:
        rs = list(pool.map(one, ks))
    return {"ratio_vs_K": TimeSeriesRecord(
        "ratio_vs_K", np.array(ks), rs, {"N": N, "h": 2.0, "tau": 1.0})}


def _figure_quench_commutator(cfg):
    recs = {}
    for N in (100, 200, 400):
        times = np.concatenate([np.linspace(0.01, 2.0, 100),
                                np.linspace(2.1, 2.0 * N, 800)])
        from .collective import DickeState
        psi0 = DickeState.polarized(N)
        H = build_lmg_hamiltonian(N, 1.0, 2.0)
        recs[f"cqt_N{N}"] = square_commutator(psi0, H, times,
                                              {"N": N, "hf": 2.0})
    return recs


def _figure_dpt_commutator(cfg):
    recs = {}
    for N in (400, 800):
        times = np.linspace(0.05, np.log(N) + 2.0, 200)
        from .collective import DickeState
        psi0 = DickeState.polarized(N)
        H = build_lmg_hamiltonian(N, 1.0, 0.5)
        recs[f"cqt_ed_N{N}"] = square_commutator(psi0, H, times,
                                                 {"N": N, "hf": 0.5})
        samples = twa_sample(N, cfg.numerics.n_samples, cfg.numerics.seed)
        grid = _dt_aligned_times(times, 1e-3)
        recs[f"cqt_twa_N{N}"] = twa_square_commutator(
            samples, N, 1.0, 0.5, grid, dt=1e-3)
    return recs


def _figure_closures(cfg):
    N = 50
    times = np.linspace(0.0, np.sqrt(N), 400)
    from .collective import DickeState
    psi0 = DickeState.polarized(N)
    H = build_lmg_hamiltonian(N, 1.0, 2.0)
    return {
        "cqt_ed": square_commutator(psi0, H, times, {"N": N, "hf": 2.0}),
        "cqt_cumulant": cumulant_closure_c(N, 1.0, 2.0, times=times),
        "cqt_hp": holstein_primakoff_c(N, 1.0, 2.0, times=times),
    }


def _figure_alpha(cfg):
    recs = {}
    N = min(cfg.physics.N, 12) if cfg.physics.N else 12
    times = np.linspace(0.0, 20.0, 41)
    for alpha in (0.5, 2.5):
        psi0 = FullState.polarized(N)
        H = build_longrange_hamiltonian(N, alpha, 1.0, 0.75)
        states = full_evolve(psi0, H, times)
        vals = [min_tmi(s) for s in states]
        recs[f"tmi_min_alpha{alpha}"] = TimeSeriesRecord(
            f"tmi_min_alpha{alpha}", times, vals, {"N": N, "alpha": alpha})
        recs[f"qfi_alpha{alpha}"] = full_qfi_record(states, times,
                                                    {"N": N, "alpha": alpha})
    return recs


def _figure_table1(cfg):
    """Fitted growth exponents for the three protocols."""
    rows = []
    labels = []
    # regular quench: early power law and post-Ehrenfest power law
    N = 200
    from .collective import DickeState
    psi0 = DickeState.polarized(N)
    H = build_lmg_hamiltonian(N, 1.0, 2.0)
    times = np.concatenate([np.linspace(0.005, 0.2, 60),
                            np.linspace(0.25, 2.0 * N, 900)])
    rec = square_commutator(psi0, H, times, {"N": N})
    rows.append(fit_power_law(rec, (0.01, 0.1)).exponent)
    labels.append("quench_early_power")
    c = rec.values
    t_star = times[np.argmax(c >= 0.9 * c.max())]
    rows.append(fit_power_law(rec, (2 * np.sqrt(N), t_star)).exponent)
    labels.append("quench_late_power")
    # DPT quench: exponential rate
    H = build_lmg_hamiltonian(N, 1.0, 0.5)
    times = np.linspace(0.05, np.log(N), 80)
    rec = square_commutator(psi0, H, times, {"N": N})
    rows.append(fit_exponential(rec, (1.0, np.log(N))).exponent)
    labels.append("dpt_rate")
    # kicked: saturation value over ten times the ramp
    U = build_floquet(N, 1.0, 2.0, 20.0, 1.0)
    periods = np.arange(1.0, 101.0)
    rec = square_commutator(psi0, U, periods, {"N": N})
    rows.append(float(rec.values[10:].mean()))
    labels.append("kick_saturation_mean")
    meta = {f"row{i}": lab for i, lab in enumerate(labels)}
    return {"table1": TimeSeriesRecord(
        "table1", np.arange(len(rows), dtype=float), rows, meta)}


FIGURES = {
    "comparison": _figure_comparison,
    "phase-space": _figure_phase_space,
    "ratio": _figure_ratio,
    "quench-commutator": _figure_quench_commutator,
    "dpt-commutator": _figure_dpt_commutator,
    "closures": _figure_closures,
    "alpha": _figure_alpha,
    "table1": _figure_table1,
}


def run_figure(name: str, config: ExperimentConfig | None = None) -> dict:
    if name not in FIGURES:
        raise ConfigError(f"unknown figure {name!r}; "
                          f"available: {', '.join(sorted(FIGURES))}")
    cfg = config or ExperimentConfig()
    return FIGURES[name](cfg)
