"""Frequency-quality statistics over uniformly sampled deviation traces.

Traces hold deviations in mHz; times in seconds.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ConfigError

HIST_BIN_MHZ = 5.0
HIST_RANGE_MHZ = 500.0
DWELL_S = 5.0


@dataclass
class FrequencyTrace:
    """Uniformly sampled frequency deviation.

    Parameters
    ----------
    t : array_like
        Sample times (s), uniformly spaced.
    delta_f : array_like
        Deviation from nominal (mHz).
    """

    t: np.ndarray
    delta_f: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.delta_f = np.asarray(self.delta_f, dtype=float)
        if self.t.shape != self.delta_f.shape or self.t.ndim != 1:
            raise ConfigError("t and delta_f must be 1-D arrays of equal length")
        if not np.all(np.isfinite(self.delta_f)) or not np.all(np.isfinite(self.t)):
            raise ConfigError("trace contains non-finite values")
        if self.t.size > 1:
            steps = np.diff(self.t)
            if np.any(steps <= 0) or np.ptp(steps) > 1e-6 * max(abs(steps[0]), 1e-12) + 1e-9:
                raise ConfigError("trace must be uniformly sampled")

    @classmethod
    def uniform(cls, delta_f, dt, t0=0.0):
        delta_f = np.asarray(delta_f, dtype=float)
        return cls(t0 + dt * np.arange(delta_f.size), delta_f)

    @property
    def dt(self):
        if self.t.size < 2:
            raise ConfigError("need at least two samples for a sampling step")
        return (self.t[-1] - self.t[0]) / (self.t.size - 1)

    def __len__(self):
        return self.delta_f.size


@dataclass
class MetricsReport:
    sigma_f: float
    pct_out_200: float
    pct_out_150: float
    nadir: float
    zenith: float
    skewness: Optional[float]
    recovery_times: List[Optional[float]]
    time_error: float
    histogram: np.ndarray = field(repr=False)
    bin_edges: np.ndarray = field(repr=False)

    def as_dict(self):
        d = asdict(self)
        d["histogram"] = [int(c) for c in self.histogram]
        d["bin_edges"] = [float(e) for e in self.bin_edges]
        return d


def _values(trace):
    return trace.delta_f if isinstance(trace, FrequencyTrace) else np.asarray(trace, dtype=float)


def compute_sigma(trace):
    """Population standard deviation (mHz)."""
    x = _values(trace)
    if x.size < 2:
        raise ConfigError("compute_sigma needs at least two samples")
    return float(np.std(x))


def pct_out_of_range(trace, threshold):
    """Percentage of samples with ``|df| > threshold`` (mHz)."""
    if not threshold > 0:
        raise ConfigError("threshold must be > 0")
    x = _values(trace)
    if x.size == 0:
        return 0.0
    return 100.0 * np.count_nonzero(np.abs(x) > threshold) / x.size


def skewness(trace):
    """Standardised third central moment (population moments)."""
    x = _values(trace)
    d = x - x.mean()
    m2 = np.mean(d * d)
    if not m2 > 0:
        raise ConfigError("skewness undefined for a zero-variance trace")
    return float(np.mean(d ** 3) / m2 ** 1.5)


def nadir_zenith(trace):
    x = _values(trace)
    if x.size == 0:
        raise ConfigError("empty trace")
    return float(x.min()), float(x.max())


def time_error(trace, f0=50.0, dt=None):
    """Accumulated clock error (s): ``sum(df / f0) * dt`` with df in Hz."""
    x = _values(trace)
    if dt is None:
        dt = trace.dt
    return float(np.sum(x) / 1000.0 / f0 * dt)


def recovery_time(trace, event_t, band=150.0, dwell=DWELL_S):
    """Seconds from ``event_t`` until ``|df|`` settles inside ``+/-band``.

    Settling means staying in band for ``dwell`` seconds (or up to the end of
    the trace). Returns ``None`` if that never happens, 0 if the trace is
    already settled at ``event_t``.
    """
    t = trace.t
    if not t[0] <= event_t <= t[-1]:
        raise ConfigError("event_t outside the trace")
    i0 = int(np.searchsorted(t, event_t - 1e-9))
    inside = np.abs(trace.delta_f[i0:]) <= band
    tt = t[i0:]
    # start index of every in-band run
    starts = np.flatnonzero(inside & ~np.concatenate(([False], inside[:-1])))
    ends = np.flatnonzero(inside & ~np.concatenate((inside[1:], [False])))
    for s, e in zip(starts, ends):
        if e == inside.size - 1 or tt[e] - tt[s] >= dwell:
            return float(max(tt[s] - event_t, 0.0))
    return None


def histogram(trace, bin_width=HIST_BIN_MHZ, limit=HIST_RANGE_MHZ):
    """Fixed-bin counts over ``[-limit, limit]``; outliers land in the end bins."""
    x = np.clip(_values(trace), -limit, limit)
    edges = np.arange(-limit, limit + bin_width / 2, bin_width)
    counts, _ = np.histogram(x, bins=edges)
    return counts, edges


def compute_metrics(trace, f0=50.0, events=(), band=150.0):
    """Full report; ``events`` are times at which recovery is measured."""
    x = trace.delta_f
    sig = compute_sigma(trace)
    nad, zen = nadir_zenith(trace)
    counts, edges = histogram(trace)
    return MetricsReport(
        sigma_f=sig,
        pct_out_200=pct_out_of_range(trace, 200.0),
        pct_out_150=pct_out_of_range(trace, 150.0),
        nadir=nad,
        zenith=zen,
        skewness=skewness(trace) if np.ptp(x) > 0 else None,
        recovery_times=[recovery_time(trace, e, band) for e in events],
        time_error=time_error(trace, f0),
        histogram=counts,
        bin_edges=edges,
    )


def load_frequency_csv(path):
    """Read a ``t_s,delta_f_mhz`` CSV (header required) into a trace."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0][:2]] != ["t_s", "delta_f_mhz"]:
        raise ConfigError(f"{path}: expected header 't_s,delta_f_mhz'")
    try:
        data = np.array([[float(a), float(b)] for a, b, *_ in rows[1:] if a.strip()])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if data.size == 0:
        raise ConfigError(f"{path}: no samples")
    return FrequencyTrace(data[:, 0], data[:, 1])
