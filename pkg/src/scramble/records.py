"""Labeled time series with run metadata, and its CSV representation.

Every dynamics routine in the package returns its output as a
:class:`TimeSeriesRecord`, so results can be compared, fitted and written
to disk uniformly.  The CSV layout is plain text: ``# key: value`` comment
lines carrying the metadata, one header row, then two columns of floats
printed with 17 significant digits (lossless float64 round trip).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np


@dataclass
class TimeSeriesRecord:
    """A labeled (t, value) series plus the parameters that produced it."""

    label: str
    times: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError(
                f"times and values must have equal length, got "
                f"{self.times.shape} vs {self.values.shape}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# label: {self.label}\n")
        for key in sorted(self.metadata):
            buf.write(f"# {key}: {_fmt_meta(self.metadata[key])}\n")
        buf.write("t,value\n")
        for t, v in zip(self.times, self.values):
            buf.write(f"{t:.17g},{v:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TimeSeriesRecord":
        label = ""
        metadata = {}
        times, values = [], []
        header_seen = False
        for line in text.splitlines():
            if not line.strip():
                continue
            if line.startswith("#"):
                key, _, raw = line[1:].partition(":")
                key = key.strip()
                raw = raw.strip()
                if key == "label":
                    label = raw
                else:
                    metadata[key] = _parse_meta(raw)
                continue
            if not header_seen:
                header_seen = True          # column header row
                continue
            a, b = line.split(",")
            times.append(float(a))
            values.append(float(b))
        return cls(label, np.array(times), np.array(values), metadata)


def _fmt_meta(value):
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _parse_meta(raw: str):
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    return raw
