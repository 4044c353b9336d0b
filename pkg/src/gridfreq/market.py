"""Five-minute real-time energy market with PFC-reserve co-optimisation.

Clearing is a merit-order pass over convex block offers. Reserve is the
unused capacity of reserve-capable resources (PFC enabled, not
downward-only); the requirement is enforced as a cap on the energy those
resources may take, which keeps the greedy pass optimal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional

import numpy as np

from . import _kernel
from .errors import ConfigError, MarketInfeasibleError

BALANCE_TOL_MW = 1e-6


class ReserveKind(str, Enum):
    LARGEST_INFEED = "largest_infeed"
    FIXED = "fixed"
    LARGEST_INFEED_PLUS = "largest_infeed_plus"


@dataclass(frozen=True)
class ReserveRule:
    kind: ReserveKind = ReserveKind.LARGEST_INFEED
    mw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ReserveKind(self.kind))
        if self.mw < 0:
            raise ConfigError("reserve MW must be >= 0")

    @classmethod
    def largest_infeed(cls):
        return cls(ReserveKind.LARGEST_INFEED)

    @classmethod
    def fixed(cls, mw):
        return cls(ReserveKind.FIXED, mw)

    @classmethod
    def largest_infeed_plus(cls, margin):
        return cls(ReserveKind.LARGEST_INFEED_PLUS, margin)


class ForecastKind(str, Enum):
    PERFECT = "perfect"
    GAUSSIAN = "gaussian"
    BIAS = "bias"


@dataclass(frozen=True)
class ForecastError:
    kind: ForecastKind = ForecastKind.PERFECT
    pct: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ForecastKind(self.kind))


@dataclass
class MarketSettings:
    enabled: bool = True
    interval: float = 300.0
    ramp_in: float = 300.0
    reserve_rule: ReserveRule = field(default_factory=ReserveRule)
    forecast: ForecastError = field(default_factory=ForecastError)

    def __post_init__(self):
        if isinstance(self.reserve_rule, dict):
            self.reserve_rule = ReserveRule(**self.reserve_rule)
        if isinstance(self.forecast, dict):
            self.forecast = ForecastError(**self.forecast)
        if not self.interval > 0:
            raise ConfigError("market interval must be > 0")
        if not 0 <= self.ramp_in <= self.interval:
            raise ConfigError("market ramp_in must lie in [0, interval]")


@dataclass
class DispatchSchedule:
    """Cleared targets for one interval (online resources only)."""

    setpoints: Dict[str, float]
    reserve: Dict[str, float]
    requirement: float
    forecast: float
    cost: float
    t_clear: float = 0.0

    @property
    def total(self):
        return math.fsum(self.setpoints.values())

    @property
    def total_reserve(self):
        return math.fsum(self.reserve.values())


def forecast_demand(true_demand, error, rng=None):
    """Demand forecast under a perfect, Gaussian (sigma %) or fixed-bias (%) error model."""
    if not true_demand > 0:
        raise ConfigError("true demand must be > 0")
    if not isinstance(error, ForecastError):
        error = ForecastError(*error) if isinstance(error, tuple) else ForecastError(error)
    if error.kind is ForecastKind.PERFECT:
        return float(true_demand)
    if error.kind is ForecastKind.BIAS:
        return true_demand * (1.0 + error.pct / 100.0)
    if rng is None:
        raise ConfigError("a Gaussian forecast error needs an rng")
    return true_demand * (1.0 + error.pct / 100.0 * rng.standard_normal())


def reserve_capable(r):
    return (r.online and r.kind.value != "Load" and r.pfc is not None
            and r.pfc.enabled and not r.downward_only)


def offer_cost(resource, p):
    """Energy cost of running ``resource`` at ``p`` MW (blocks above ``p_min``)."""
    cost, lo = 0.0, resource.p_min
    for upto, price in resource.cost:
        if p <= lo:
            break
        cost += (min(p, upto) - lo) * price
        lo = upto
    return cost


def marginal_price(resource, p):
    for upto, price in resource.cost:
        if p < upto - 1e-9:
            return price
    return resource.cost[-1][1]


def _requirement(rule, largest):
    if rule.kind is ReserveKind.FIXED:
        return rule.mw
    if rule.kind is ReserveKind.LARGEST_INFEED:
        return largest
    return largest + rule.mw


def _dispatch(forecast, online, requirement):
    """Greedy energy dispatch honouring the capable-energy budget."""
    fixed = [r for r in online if not r.dispatchable]
    disp = [r for r in online if r.dispatchable]
    p = {r.id: min(max(r.p_set, r.p_min), r.p_max) for r in fixed}
    p.update({r.id: r.p_min for r in disp})

    need = forecast - math.fsum(p.values())
    if need < -BALANCE_TOL_MW:
        raise MarketInfeasibleError(-need, "forecast below minimum generation")
    room = math.fsum(r.p_max - r.p_min for r in disp)
    if need > room + BALANCE_TOL_MW:
        raise MarketInfeasibleError(need - room, "forecast above available capacity")

    # reserve still to be found on dispatchable capable units after fixed ones
    fixed_room = math.fsum(r.p_max - p[r.id] for r in fixed if reserve_capable(r))
    cap_disp = [r for r in disp if reserve_capable(r)]
    budget = math.fsum(r.p_max - r.p_min for r in cap_disp) - max(requirement - fixed_room, 0.0)
    if budget < -BALANCE_TOL_MW:
        raise MarketInfeasibleError(-budget, "insufficient reserve-capable capacity")
    incap_room = math.fsum(r.p_max - r.p_min for r in disp if not reserve_capable(r))
    excess = need - max(budget, 0.0) - incap_room
    if excess > BALANCE_TOL_MW:
        raise MarketInfeasibleError(excess, "energy and reserve cannot both be met")

    blocks = []
    for order, r in enumerate(disp):
        lo = r.p_min
        for k, (upto, price) in enumerate(r.cost):
            if upto > lo:
                blocks.append((price, order, k, r, upto - lo))
                lo = upto
    blocks.sort(key=lambda b: (b[0], b[1], b[2]))
    remaining = need
    budget = max(budget, 0.0)
    for price, _, _, r, width in blocks:
        if remaining <= 0:
            break
        take = min(width, remaining)
        if reserve_capable(r):
            take = min(take, budget)
            budget -= take
        if take > 0:
            p[r.id] += take
            remaining -= take
    # absorb rounding so the schedule balances to the forecast
    if abs(remaining) > BALANCE_TOL_MW:
        raise MarketInfeasibleError(remaining, "dispatch did not balance")
    if remaining != 0.0:
        for r in disp:
            nudge = min(max(p[r.id] + remaining, r.p_min), r.p_max) - p[r.id]
            p[r.id] += nudge
            remaining -= nudge
            if remaining == 0.0:
                break
    return p


def clear_market(forecast, resources, settings, t=0.0):
    """Cost-minimising dispatch of ``forecast`` MW with PFC reserve withheld.

    Raises
    ------
    MarketInfeasibleError
        With the MW shortfall, when energy or reserve cannot be met.
    """
    online = [r for r in resources if r.online]
    rule = settings.reserve_rule
    try:
        if rule.kind is ReserveKind.FIXED:
            req = rule.mw
            p = _dispatch(forecast, online, req)
        else:
            # reserve depends on the largest dispatched output; iterate to a fixed point
            p = _dispatch(forecast, online, 0.0)
            req = _requirement(rule, max(p.values(), default=0.0))
            for _ in range(50):
                p = _dispatch(forecast, online, req)
                largest = _requirement(rule, max(p.values(), default=0.0))
                if largest <= req + BALANCE_TOL_MW:
                    break
                req = largest
            else:
                raise MarketInfeasibleError(0.0, "reserve requirement did not converge")
    except MarketInfeasibleError as exc:
        raise MarketInfeasibleError(exc.shortfall_mw, exc.reason, t) from None

    reserve = {r.id: 0.0 for r in online}
    left = req
    capable = sorted((r for r in online if reserve_capable(r)),
                     key=lambda r: (marginal_price(r, p[r.id]), online.index(r)))
    for r in capable:
        if left <= 0:
            break
        take = min(r.p_max - p[r.id], left)
        reserve[r.id] = take
        left -= take
    if left > BALANCE_TOL_MW:
        raise MarketInfeasibleError(left, "insufficient reserve", t)
    cost = math.fsum(offer_cost(r, p[r.id]) for r in online if r.dispatchable)
    return DispatchSchedule(setpoints=p, reserve=reserve, requirement=req, forecast=float(forecast),
                            cost=cost, t_clear=t)


def ramp_setpoints(previous, next_, t_within_interval, settings, resources=None):
    """Setpoints delivered ``t_within_interval`` s into a ramp between two schedules.

    Linear over ``settings.ramp_in`` then flat; each resource's ``ramp_rate``
    (MW/min) caps the move when ``resources`` are supplied.
    """
    if not 0 <= t_within_interval <= settings.interval:
        raise ConfigError("t_within_interval must lie in [0, interval]")
    rates = {}
    if resources is not None:
        rates = {r.id: r.ramp_rate / 60.0 for r in resources}
    out = {}
    for rid, target in next_.setpoints.items():
        start = previous.setpoints.get(rid, target)
        out[rid] = _kernel.ramped_setpoint(start, target, float(t_within_interval),
                                           settings.ramp_in, rates.get(rid, math.inf))
    return out


def next_boundary(t, interval):
    """First clearing instant at or after ``t``."""
    k = math.ceil(t / interval - 1e-12)
    return k * interval


def redispatch_after_contingency(state, resources, settings, forecast):
    """Schedule for the first regular clearing after the latest trip.

    No out-of-cycle clearing happens: the returned schedule is stamped with
    the next interval boundary and excludes tripped units.
    """
    trips = [t for t, _ in state.trips if t >= state.t_last_clear]
    if not trips:
        raise ConfigError("no trip since the last clearing")
    t_eff = next_boundary(max(trips), settings.interval)
    return clear_market(forecast, resources, settings, t=t_eff)
