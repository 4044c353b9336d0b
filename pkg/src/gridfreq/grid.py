"""Aggregate (centre-of-inertia) frequency dynamics.

The swing equation is written on MW:

    2 H_tot / f0 * d(df)/dt = sum(p_out - p_ref) + offset - disturbance - D' df

with ``H_tot`` the online stored energy (MW s), ``D' = d_load * s_base / f0``
(MW/Hz) and ``offset`` any initial generation/load mismatch. Each resource
output tracks its command ``setpoint + PFC + AGC`` through a rate-limited
first-order lag.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import _kernel
from .controllers import PfcSettings, droop_gain
from .errors import ConfigError, NumericalError

# initial mismatches below this are treated as a balanced start
BALANCE_TOL_MW = 1e-6


class ResourceKind(str, Enum):
    SYNC_GEN = "SyncGen"
    WIND = "WindPlant"
    SOLAR = "SolarPlant"
    BESS = "Bess"
    HVDC = "HvdcLink"
    GFM = "GfmConverter"
    LOAD = "Load"


@dataclass
class SystemParams:
    f0: float = 50.0
    s_base: float = 7000.0
    d_load: float = 1.0
    dt: float = 0.01

    def __post_init__(self):
        if not self.f0 > 0:
            raise ConfigError("f0 must be > 0")
        if not self.s_base > 0:
            raise ConfigError("s_base must be > 0")
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")
        if self.d_load < 0:
            raise ConfigError("d_load must be >= 0")

    @property
    def damping_mw_per_hz(self):
        return self.d_load * self.s_base / self.f0


@dataclass
class Resource:
    """A generation, storage, interconnector or load asset.

    Powers are injections in MW (a load has negative limits). ``cost`` holds
    the energy offer as ``[(mw_upto, price), ...]`` blocks above ``p_min``;
    a plain number is a single-price offer. Non-dispatchable resources keep
    ``p_set`` through market clearings. ``ramp_rate`` is MW/min.
    """

    id: str
    kind: ResourceKind
    p_max: float
    p_min: float = 0.0
    p_set: float = 0.0
    rating: Optional[float] = None
    inertia_h: float = 0.0
    tau_resp: float = 1.0
    ramp_rate: float = math.inf
    headroom: Optional[float] = None
    footroom: Optional[float] = None
    downward_only: bool = False
    pfc: Optional[PfcSettings] = None
    cost: object = 0.0
    dispatchable: bool = True
    online: bool = True

    def __post_init__(self):
        self.kind = ResourceKind(self.kind)
        if self.rating is None:
            self.rating = max(abs(self.p_max), abs(self.p_min))
        if not self.p_min <= self.p_set <= self.p_max:
            raise ConfigError(f"{self.id}: need p_min <= p_set <= p_max")
        if self.rating < 0 or self.inertia_h < 0:
            raise ConfigError(f"{self.id}: rating and inertia_h must be >= 0")
        if not self.tau_resp > 0:
            raise ConfigError(f"{self.id}: tau_resp must be > 0")
        if not self.ramp_rate > 0:
            raise ConfigError(f"{self.id}: ramp_rate must be > 0")
        if self.headroom is not None and not 0 <= self.headroom <= self.p_max - self.p_set + 1e-9:
            raise ConfigError(f"{self.id}: headroom must lie in [0, p_max - p_set]")
        if self.footroom is not None and not 0 <= self.footroom <= self.p_set - self.p_min + 1e-9:
            raise ConfigError(f"{self.id}: footroom must lie in [0, p_set - p_min]")
        if isinstance(self.pfc, dict):
            self.pfc = PfcSettings(**self.pfc)
        self.cost = cost_blocks(self.cost, self.p_min, self.p_max, self.id)

    @property
    def up_room(self):
        return self.p_max - self.p_set if self.headroom is None else self.headroom

    @property
    def down_room(self):
        return self.p_set - self.p_min if self.footroom is None else self.footroom


def cost_blocks(cost, p_min, p_max, rid="?"):
    """Normalise an offer to a tuple of ``(mw_upto, price)`` covering up to ``p_max``."""
    if isinstance(cost, (int, float)):
        return ((float(p_max), float(cost)),)
    blocks = [(float(u), float(c)) for u, c in cost]
    if not blocks:
        raise ConfigError(f"{rid}: empty cost curve")
    uppers = [u for u, _ in blocks]
    prices = [c for _, c in blocks]
    if any(b <= a for a, b in zip(uppers, uppers[1:])) or uppers[0] <= p_min:
        raise ConfigError(f"{rid}: cost breakpoints must increase from p_min")
    if any(b < a for a, b in zip(prices, prices[1:])):
        raise ConfigError(f"{rid}: marginal cost must be non-decreasing (convex offer)")
    if uppers[-1] < p_max:
        blocks[-1] = (float(p_max), blocks[-1][1])
    return tuple(blocks)


def aggregate_inertia(resources):
    """Stored kinetic (or virtual) energy of the online fleet, in MW s."""
    return float(sum(r.inertia_h * r.rating for r in resources if r.online))


@dataclass
class GridState:
    """Mutable simulation state; arrays are ordered like the resource list.

    ``sp_prev``/``sp_next`` are the market setpoints being ramped between,
    starting at ``t_ramp0`` over ``ramp_in`` seconds.
    """

    t: float
    delta_f: float
    time_error: float
    p_out: np.ndarray
    p_ref: np.ndarray
    sp_prev: np.ndarray
    sp_next: np.ndarray
    agc_cmd: np.ndarray
    t_ramp0: float = 0.0
    ramp_in: float = 0.0
    agc_integral: float = 0.0
    offset: float = 0.0
    t_last_clear: float = 0.0
    trips: list = field(default_factory=list)

    @classmethod
    def initial(cls, resources, demand=None):
        """Equilibrium state with every resource at its setpoint.

        If ``demand`` is given, ``offset = sum(p_set) - demand`` (snapped to
        zero below 1e-6 MW) is carried as a constant imbalance.
        """
        p = np.array([r.p_set if r.online else 0.0 for r in resources], dtype=float)
        offset = 0.0
        if demand is not None:
            offset = math.fsum(p) - demand
            if abs(offset) < BALANCE_TOL_MW:
                offset = 0.0
        return cls(t=0.0, delta_f=0.0, time_error=0.0, p_out=p.copy(), p_ref=p.copy(),
                   sp_prev=p.copy(), sp_next=p.copy(), agc_cmd=np.zeros_like(p), offset=offset)

    def copy(self):
        return GridState(self.t, self.delta_f, self.time_error, self.p_out.copy(), self.p_ref.copy(),
                         self.sp_prev.copy(), self.sp_next.copy(), self.agc_cmd.copy(), self.t_ramp0,
                         self.ramp_in, self.agc_integral, self.offset, self.t_last_clear, list(self.trips))

    def setpoints(self, resources):
        """Delivered market setpoints at ``self.t``."""
        return np.array([_kernel.ramped_setpoint(a, b, self.t - self.t_ramp0, self.ramp_in,
                                                 r.ramp_rate / 60.0)
                         for a, b, r in zip(self.sp_prev, self.sp_next, resources)])


class Fleet:
    """Array view of a resource list, as consumed by the compiled integrator."""

    def __init__(self, resources, f0=50.0):
        self.resources = list(resources)
        self.ids = [r.id for r in self.resources]
        self.index = {rid: i for i, rid in enumerate(self.ids)}
        if len(self.index) != len(self.ids):
            raise ConfigError("duplicate resource ids")
        n = len(self.resources)
        self.f0 = f0
        self.online = np.array([r.online for r in self.resources], dtype=np.bool_)
        self.pmin = np.array([r.p_min for r in self.resources], dtype=float)
        self.pmax = np.array([r.p_max for r in self.resources], dtype=float)
        self.tau = np.array([r.tau_resp for r in self.resources], dtype=float)
        self.rate = np.array([r.ramp_rate / 60.0 for r in self.resources], dtype=float)
        # without an explicit headroom the command clip to [p_min, p_max] is the only limit,
        # so PFC keeps its full range as market setpoints move
        self.up = np.array([np.inf if r.headroom is None else r.headroom for r in self.resources])
        self.dn = np.array([np.inf if r.footroom is None else r.footroom for r in self.resources])
        self.down_only = np.array([r.downward_only for r in self.resources], dtype=np.bool_)
        kmax = max([2] + [len(r.pfc.curve.breakpoints) for r in self.resources
                          if r.pfc is not None and r.pfc.curve is not None])
        self.mode = np.zeros(n, dtype=np.int64)
        self.db = np.zeros(n)
        self.gain = np.zeros(n)
        self.cx = np.zeros((n, kmax))
        self.cy = np.zeros((n, kmax))
        self.cn = np.full(n, 2, dtype=np.int64)
        self.cx[:, 1] = 1.0
        self.contracted = np.zeros(n)
        for i in range(n):
            self.refresh_pfc(i)

    def refresh_pfc(self, i):
        """Re-read PFC settings of resource ``i`` (after a deadband switch, say)."""
        r = self.resources[i]
        s = r.pfc
        if s is None or not s.enabled:
            self.mode[i] = _kernel.PFC_OFF
            return
        self.db[i] = s.deadband / 1000.0
        if s.curve is not None:
            self.mode[i] = _kernel.PFC_CURVE
            k = len(s.curve.breakpoints)
            self.cx[i, :k] = s.curve.x_mhz
            self.cy[i, :k] = s.curve.fraction
            self.cn[i] = k
            self.contracted[i] = s.contracted_mw if s.contracted_mw is not None else r.rating
        else:
            self.mode[i] = _kernel.PFC_DROOP
            self.gain[i] = droop_gain(s.droop_pct, r.rating, self.f0)

    def trip(self, resource_id, state):
        """Trip a resource in place; returns the MW of output lost."""
        i = self.index.get(resource_id)
        lost = 0.0 if i is None else float(state.p_out[i])
        self.resources = apply_trip(self.resources, resource_id, state)
        self.online[i] = False
        return lost

    def inertia_constant(self):
        return aggregate_inertia(self.resources)

    def integrate(self, state, params, dist, agc=None, record=None):
        """Advance ``state`` by ``len(dist)`` steps; returns the recorded arrays."""
        n = len(dist)
        h_tot = aggregate_inertia(self.resources)
        if not h_tot > 0:
            raise ConfigError("aggregate inertia (incl. virtual inertia) must be > 0")
        m = 2.0 * h_tot / params.f0
        if record is None:
            record = tuple(np.empty(n) for _ in range(5))
        if agc is not None:
            state.agc_cmd[:] = agc
        st = np.array([state.delta_f, state.time_error])
        k0 = int(round(state.t / params.dt))
        k, who = _kernel.integrate(
            n, k0, params.dt, params.f0, m, params.damping_mw_per_hz, state.offset,
            np.ascontiguousarray(dist, dtype=float), st, state.p_out, state.p_ref, self.online,
            self.pmin, self.pmax, self.tau, self.rate, self.mode, self.db, self.gain, self.up,
            self.dn, self.down_only, self.cx, self.cy, self.cn, self.contracted,
            state.sp_prev, state.sp_next, state.t_ramp0, state.ramp_in, state.agc_cmd, *record)
        if k >= 0:
            culprit = "delta_f" if who < 0 else self.ids[who]
            raise NumericalError((k0 + k) * params.dt, culprit)
        state.delta_f = float(st[0])
        state.time_error = float(st[1])
        state.t = (k0 + n) * params.dt
        return record


def step_coi(state, params, resources, net_load_disturbance):
    """Advance the centre-of-inertia state by one RK4 step of ``params.dt``.

    Returns a new :class:`GridState`; the input is not modified.
    ``net_load_disturbance`` (MW, positive = extra load) is held over the step.
    """
    fleet = Fleet(resources, f0=params.f0)
    new = state.copy()
    fleet.integrate(new, params, np.array([float(net_load_disturbance)]))
    return new


def apply_trip(resources, resource_id, state=None):
    """Trip ``resource_id``: zero output, headroom and inertia from now on.

    Returns a new resource list (the tripped entry replaced). When ``state``
    is given its output is zeroed too, so the lost ``p_out`` shows up as an
    imbalance, and the trip is logged in ``state.trips``.
    """
    ids = [r.id for r in resources]
    if resource_id not in ids:
        raise ConfigError(f"unknown resource id {resource_id!r}")
    i = ids.index(resource_id)
    r = resources[i]
    if not r.online:
        raise ConfigError(f"resource {resource_id!r} is already tripped")
    tripped = replace(r, online=False)
    out = list(resources)
    out[i] = tripped
    if state is not None:
        state.p_out[i] = 0.0
        state.trips.append((state.t, resource_id))
    return out


def lost_infeed(resources, resource_id, state):
    """MW of output removed by tripping ``resource_id`` (negative = lost generation)."""
    i = [r.id for r in resources].index(resource_id)
    return -float(state.p_out[i])
