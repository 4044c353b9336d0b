"""Seeded load perturbations: OU noise, scheduled ramps, Poisson jumps, trips.

Each disturbance type draws from its own child of the run's
``numpy.random.SeedSequence``, so switching one of them off leaves the
others' sample paths untouched.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError

# child stream indices of the master SeedSequence
STREAM_OU, STREAM_JUMPS, STREAM_FORECAST = 0, 1, 2


@dataclass
class OuParams:
    """Ornstein-Uhlenbeck parameters: ``dx = theta (mu - x) dt + sigma dW``.

    ``theta`` in 1/s, ``sigma`` in MW/sqrt(s), ``mu`` in MW.
    """

    theta: float = 0.1
    sigma: float = 0.0
    mu: float = 0.0

    def __post_init__(self):
        if not self.theta > 0:
            raise ConfigError("OU theta must be > 0")
        if self.sigma < 0:
            raise ConfigError("OU sigma must be >= 0")

    @classmethod
    def from_stationary_std(cls, std, theta, mu=0.0):
        return cls(theta=theta, sigma=std * math.sqrt(2.0 * theta), mu=mu)

    @classmethod
    def ten_percent_band(cls, demand, theta=0.1):
        """+/-3 sigma stationary band spanning 10 % of ``demand``."""
        return cls.from_stationary_std(demand * 0.10 / 6.0, theta)

    @property
    def stationary_std(self):
        return self.sigma / math.sqrt(2.0 * self.theta)


@dataclass
class Ramp:
    """Persistent load level change: ``magnitude`` % of demand over ``duration`` s."""

    start: float
    magnitude: float
    duration: float = 300.0

    def __post_init__(self):
        if not self.duration > 0:
            raise ConfigError("ramp duration must be > 0")


@dataclass
class JumpParams:
    """Poisson load steps of +/- ``magnitude`` % lasting ``duration`` s."""

    magnitude: float = 2.5
    rate: float = 4.0
    duration: float = 60.0

    def __post_init__(self):
        if self.rate < 0:
            raise ConfigError("jump rate must be >= 0")
        if not self.duration > 0:
            raise ConfigError("jump duration must be > 0")


@dataclass
class Trip:
    time: float
    resource_id: str


@dataclass
class DisturbanceConfig:
    ou: OuParams = field(default_factory=OuParams)
    ramps: List[Ramp] = field(default_factory=list)
    jumps: JumpParams = field(default_factory=lambda: JumpParams(rate=0.0))
    trips: List[Trip] = field(default_factory=list)
    seed: int = 0


@dataclass
class DisturbanceSample:
    t: float
    ou_value: float
    ramp_value: float
    jump_value: float

    @property
    def total(self):
        return self.ou_value + self.ramp_value + self.jump_value


def daily_ramps(magnitude=5.0, duration=300.0):
    """Morning pickup (07:00, +), midday PV (12:00, -) and evening peak (18:00, +)."""
    return [Ramp(7 * 3600.0, magnitude, duration),
            Ramp(12 * 3600.0, -magnitude, duration),
            Ramp(18 * 3600.0, magnitude, duration)]


def streams(seed):
    """Independent generators for OU, jumps and forecast errors."""
    children = np.random.SeedSequence(int(seed)).spawn(3)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def ou_step(x, cfg, dt, rng):
    """One Euler-Maruyama step of the OU process."""
    if not dt > 0:
        raise ConfigError("dt must be > 0")
    z = rng.standard_normal()
    return x + cfg.theta * (cfg.mu - x) * dt + cfg.sigma * math.sqrt(dt) * z


def ou_path(x0, cfg, dt, n, rng):
    """``n`` successive OU values starting with ``x0``; also returns the next value.

    Same recursion as :func:`ou_step`, evaluated as a first-order IIR filter.
    """
    z = rng.standard_normal(n)
    a = 1.0 - cfg.theta * dt
    u = cfg.theta * cfg.mu * dt + cfg.sigma * math.sqrt(dt) * z
    y, _ = lfilter([1.0], [1.0, -a], u, zi=[a * x0])
    path = np.empty(n)
    path[0] = x0
    path[1:] = y[:-1]
    return path, float(y[-1])


def ramp_value(t, ramps, demand):
    """Summed ramp offset (MW) at time(s) ``t``; completed ramps hold their level."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for r in ramps:
        frac = np.clip((t - r.start) / r.duration, 0.0, 1.0)
        out = out + frac * (r.magnitude / 100.0 * demand)
    return out if out.ndim else float(out)


def draw_jumps(duration, cfg, rng):
    """Poisson arrival times in ``[0, duration)`` and equiprobable signs."""
    if cfg.rate <= 0:
        return np.empty(0), np.empty(0)
    mean_gap = 3600.0 / cfg.rate
    # over-draw then trim, one batch is almost always enough
    n_guess = int(duration / mean_gap * 1.5) + 20
    times = np.cumsum(rng.exponential(mean_gap, n_guess))
    while times[-1] < duration:
        times = np.concatenate([times, times[-1] + np.cumsum(rng.exponential(mean_gap, n_guess))])
    times = times[times < duration]
    signs = rng.choice(np.array([-1.0, 1.0]), size=times.size)
    return times, signs


def jump_offset(t, times, signs, cfg, demand):
    """Active jump offset (MW) at time(s) ``t`` for a drawn event list."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    step = cfg.magnitude / 100.0 * demand
    lo = t.min() if t.size else 0.0
    hi = t.max() if t.size else 0.0
    for te, sg in zip(times, signs):
        if te > hi or te + cfg.duration <= lo:
            continue
        out = out + np.where((t >= te) & (t < te + cfg.duration), sg * step, 0.0)
    return out if out.ndim else float(out)


def sample_jumps(t, cfg, rng, demand):
    """Jump offset (MW) at times ``t``, drawing arrivals over ``[0, max(t)]``."""
    t = np.asarray(t, dtype=float)
    times, signs = draw_jumps(float(np.max(t)) + 1e-9 if t.size else 0.0, cfg, rng)
    return jump_offset(t, times, signs, cfg, demand)


class DisturbanceGenerator:
    """Chunked, deterministic generator of the aggregate load disturbance."""

    def __init__(self, cfg, demand, dt, duration):
        self.cfg = cfg
        self.demand = demand
        self.dt = dt
        rng_ou, rng_jumps, self.rng_forecast = streams(cfg.seed)
        self._rng_ou = rng_ou
        self.jump_times, self.jump_signs = draw_jumps(duration, cfg.jumps, rng_jumps)
        self._x = cfg.ou.mu
        self.k = 0

    @property
    def ou_now(self):
        return self._x

    def next(self, n):
        """Component arrays ``(ou, ramp, jump)`` for the next ``n`` steps."""
        t = (self.k + np.arange(n)) * self.dt
        if self.cfg.ou.sigma > 0 or self._x != self.cfg.ou.mu:
            ou, self._x = ou_path(self._x, self.cfg.ou, self.dt, n, self._rng_ou)
        else:
            ou = np.full(n, self._x)
        ramp = ramp_value(t, self.cfg.ramps, self.demand)
        jump = jump_offset(t, self.jump_times, self.jump_signs, self.cfg.jumps, self.demand)
        self.k += n
        return ou, ramp, jump

    def sample(self, t):
        """Deterministic parts (ramp, jump) at a single time, OU at its current value."""
        return DisturbanceSample(t, self._x, float(ramp_value(t, self.cfg.ramps, self.demand)),
                                 float(jump_offset(t, self.jump_times, self.jump_signs,
                                                   self.cfg.jumps, self.demand)))
