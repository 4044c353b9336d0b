"""Primary frequency control (deadband, droop, response curves) and integral AGC."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import _kernel
from .errors import ConfigError

NARROW_DEADBAND_MHZ = 15.0
WIDE_DEADBAND_MHZ = 200.0


class DeadbandMode(str, Enum):
    NARROW = "narrow"
    WIDE = "wide"


@dataclass(frozen=True)
class PiecewiseResponseCurve:
    """Frequency-to-response trajectory of a contracted PFC product.

    Parameters
    ----------
    breakpoints : sequence of (float, float)
        ``(delta_f_mhz, fraction)`` pairs. ``delta_f_mhz`` strictly
        increasing, ``fraction`` in [-1, 1] and non-increasing so that the
        response always opposes the deviation. Beyond the outermost points the
        end fractions are held.
    """

    breakpoints: tuple

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.breakpoints)
        object.__setattr__(self, "breakpoints", pts)
        if len(pts) < 2:
            raise ConfigError("response curve needs at least two breakpoints")
        xs = np.array([x for x, _ in pts])
        ys = np.array([y for _, y in pts])
        if not np.all(np.isfinite(xs)) or not np.all(np.isfinite(ys)):
            raise ConfigError("response curve breakpoints must be finite")
        if np.any(np.diff(xs) <= 0):
            raise ConfigError("response curve delta_f values must be strictly increasing")
        if np.any(np.abs(ys) > 1.0):
            raise ConfigError("response curve fractions must lie in [-1, 1]")
        if np.any(np.diff(ys) > 0):
            raise ConfigError("response curve fractions must be non-increasing in delta_f")
        if np.interp(0.0, xs, ys) != 0.0:
            raise ConfigError("response curve must be zero at delta_f = 0")

    @property
    def x_mhz(self):
        return np.array([x for x, _ in self.breakpoints])

    @property
    def fraction(self):
        return np.array([y for _, y in self.breakpoints])


def dynamic_regulation(deadband_mhz=15.0, full_mhz=200.0):
    """Slow, linear product: zero within the deadband, full response at ``full_mhz``."""
    return PiecewiseResponseCurve(((-full_mhz, 1.0), (-deadband_mhz, 0.0),
                                   (deadband_mhz, 0.0), (full_mhz, -1.0)))


def dynamic_moderation(deadband_mhz=15.0):
    """Small response inside +/-100 mHz, steep to full response at +/-200 mHz."""
    return PiecewiseResponseCurve(((-200.0, 1.0), (-100.0, 0.05), (-deadband_mhz, 0.0),
                                   (deadband_mhz, 0.0), (100.0, -0.05), (200.0, -1.0)))


def dynamic_containment(deadband_mhz=15.0):
    """Post-fault product: 5 % up to +/-200 mHz, full response at +/-500 mHz."""
    return PiecewiseResponseCurve(((-500.0, 1.0), (-200.0, 0.05), (-deadband_mhz, 0.0),
                                   (deadband_mhz, 0.0), (200.0, -0.05), (500.0, -1.0)))


@dataclass
class PfcSettings:
    """Governor-local primary control of one resource.

    Exactly one of ``droop_pct`` and ``curve`` must be given. ``fat`` is the
    full activation time in seconds; ``contracted_mw`` is the MW volume a
    curve fraction of 1 maps to (defaults to the resource rating).
    """

    deadband: float = NARROW_DEADBAND_MHZ
    droop_pct: Optional[float] = None
    curve: Optional[PiecewiseResponseCurve] = None
    enabled: bool = True
    mandatory: bool = True
    fat: float = 1.0
    contracted_mw: Optional[float] = None

    def __post_init__(self):
        if self.droop_pct is not None and self.curve is not None:
            raise ConfigError("PFC settings take either droop_pct or a curve, not both")
        if self.droop_pct is None and self.curve is None:
            raise ConfigError("PFC settings need droop_pct or a curve")
        if self.deadband < 0:
            raise ConfigError(f"deadband must be >= 0, got {self.deadband}")
        if self.droop_pct is not None and not self.droop_pct > 0:
            raise ConfigError(f"droop_pct must be > 0, got {self.droop_pct}")
        if not self.fat > 0:
            raise ConfigError(f"fat must be > 0, got {self.fat}")
        if self.curve is not None and not isinstance(self.curve, PiecewiseResponseCurve):
            self.curve = PiecewiseResponseCurve(self.curve)


def apply_deadband(delta_f, deadband):
    """Deviation beyond the deadband, in Hz.

    ``deadband`` is the half-width in mHz. Inside the band the result is zero;
    outside it is offset by the band so the response is continuous at the
    edge.

    >>> round(apply_deadband(-0.150, 15.0), 9)
    -0.135
    """
    if deadband < 0:
        raise ConfigError("deadband must be >= 0")
    db = deadband / 1000.0
    excess = abs(delta_f) - db
    if excess <= 0.0:
        return 0.0
    return math.copysign(excess, delta_f)


def droop_gain(droop_pct, rating, f0=50.0):
    """Droop stiffness in MW/Hz: ``100/droop * rating / f0``."""
    return 100.0 / droop_pct * rating / f0


def piecewise_response(delta_f, curve, contracted):
    """Curve response (MW) for a deviation ``delta_f`` in Hz.

    Linear interpolation between breakpoints, saturating at the end fractions.
    """
    if not isinstance(curve, PiecewiseResponseCurve):
        curve = PiecewiseResponseCurve(curve)
    return float(np.interp(delta_f * 1000.0, curve.x_mhz, curve.fraction)) * contracted


def _limits(resource):
    up = resource.headroom if resource.headroom is not None else resource.p_max - resource.p_set
    dn = resource.footroom if resource.footroom is not None else resource.p_set - resource.p_min
    return max(up, 0.0), max(dn, 0.0)


def pfc_response(delta_f, settings, resource, f0=50.0):
    """Commanded PFC change (MW) of ``resource`` for a deviation ``delta_f`` (Hz).

    Droop: ``-(100/droop) * (df_eff/f0) * rating``; curve:
    ``curve(df) * contracted``. Either way the result is saturated to
    ``[-footroom, +headroom]`` and clamped to <= 0 for downward-only plants.
    Disabled settings or a tripped resource give 0.
    """
    if settings.droop_pct is not None and settings.curve is not None:
        raise ConfigError("PFC settings take either droop_pct or a curve, not both")
    if not settings.enabled or not resource.online:
        return 0.0
    up, dn = _limits(resource)
    if settings.curve is not None:
        mode = _kernel.PFC_CURVE
        gain = 0.0
        cx, cy = settings.curve.x_mhz, settings.curve.fraction
        contracted = settings.contracted_mw if settings.contracted_mw is not None else resource.rating
    else:
        mode = _kernel.PFC_DROOP
        gain = droop_gain(settings.droop_pct, resource.rating, f0)
        cx = cy = np.zeros(1)
        contracted = 0.0
    return float(_kernel.pfc_command(float(delta_f), mode, settings.deadband / 1000.0, gain, up, dn,
                                     bool(resource.downward_only), cx, cy, len(cx), contracted))


def adaptive_deadband_switch(settings, mode):
    """Return a copy of ``settings`` with the narrow (15 mHz) or wide (200 mHz) deadband."""
    mode = DeadbandMode(mode)
    db = NARROW_DEADBAND_MHZ if mode is DeadbandMode.NARROW else WIDE_DEADBAND_MHZ
    if settings.deadband == db:
        return settings
    return replace(settings, deadband=db)


@dataclass
class AgcSettings:
    """Single-area integral AGC.

    The integral advances every ``cycle`` seconds by
    ``k0 * ACE * cycle / norm`` with ``ACE = -bias_b * delta_f``, so the
    effective integral rate is ``k0 / norm`` per second (100 s time constant
    with the defaults). ``bias_b``, ``participation`` and the output limits
    are derived from the fleet when left as ``None``.
    """

    enabled: bool = True
    k0: float = 10.0
    cycle: float = 2.0
    norm: float = 1000.0
    bias_b: Optional[float] = None
    participation: Optional[dict] = None
    p_lo: Optional[float] = None
    p_hi: Optional[float] = None

    def __post_init__(self):
        if not self.cycle > 0:
            raise ConfigError(f"AGC cycle must be > 0, got {self.cycle}")
        if not self.norm > 0:
            raise ConfigError(f"AGC norm must be > 0, got {self.norm}")
        if self.participation is not None:
            check_participation(self.participation)


def check_participation(factors):
    vals = np.array(list(factors.values()), dtype=float)
    if vals.size == 0:
        raise ConfigError("AGC participation is empty")
    if np.any(vals < 0):
        raise ConfigError("AGC participation factors must be >= 0")
    if abs(vals.sum() - 1.0) > 1e-9:
        raise ConfigError(f"AGC participation factors sum to {vals.sum():.6g}, not 1")


def agc_step(state, delta_f, settings, limits=None):
    """One AGC cycle.

    Updates ``state.agc_integral`` in place (clamped to ``[p_lo, p_hi]``) and
    returns the per-resource setpoint deltas ``{id: MW}``. ``limits`` maps
    resource ids to ``(lo, hi)`` MW bounds on their share.
    """
    if not settings.enabled:
        return {rid: 0.0 for rid in (settings.participation or {})}
    if settings.participation is None or settings.bias_b is None:
        raise ConfigError("AGC needs resolved participation and bias_b")
    check_participation(settings.participation)
    ace = -settings.bias_b * delta_f
    integral = state.agc_integral + settings.k0 * ace * settings.cycle / settings.norm
    if settings.p_hi is not None:
        integral = min(integral, settings.p_hi)
    if settings.p_lo is not None:
        integral = max(integral, settings.p_lo)
    state.agc_integral = integral
    deltas = {}
    for rid, share in settings.participation.items():
        d = integral * share
        if limits is not None and rid in limits:
            lo, hi = limits[rid]
            d = min(max(d, lo), hi)
        deltas[rid] = d
    return deltas


def default_participation(resources, kinds=("SyncGen",)):
    """Headroom-proportional factors over online resources of the given kinds."""
    room = {r.id: max(r.p_max - r.p_set, 0.0) for r in resources
            if r.online and r.kind.value in kinds}
    total = sum(room.values())
    if total <= 0:
        raise ConfigError(f"no AGC-capable headroom among kinds {kinds}")
    return {rid: v / total for rid, v in room.items()}


def aggregate_stiffness(resources, f0=50.0):
    """Sum of droop stiffness (MW/Hz) of online resources with enabled droop PFC."""
    k = 0.0
    for r in resources:
        if r.online and r.pfc is not None and r.pfc.enabled and r.pfc.droop_pct is not None:
            k += droop_gain(r.pfc.droop_pct, r.rating, f0)
    return k
