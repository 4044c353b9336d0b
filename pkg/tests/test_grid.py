import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import trapezoid

from conftest import sync_unit
from gridfreq import (ConfigError, GridState, NumericalError, Resource, SystemParams, aggregate_inertia,
                      apply_trip, step_coi)
from gridfreq.grid import Fleet, cost_blocks, lost_infeed


def test_aggregate_inertia_single_machine():
    assert aggregate_inertia([sync_unit("g", h=5.0, rating=100.0, p_max=100.0, p_set=50.0)]) == 500.0


def test_aggregate_inertia_empty():
    assert aggregate_inertia([]) == 0.0


def test_aggregate_inertia_twenty_machines():
    fleet = [sync_unit(f"g{i}", h=4.0, rating=350.0, p_max=350.0, p_set=200.0) for i in range(20)]
    brute = 0.0
    for r in fleet:
        brute += r.inertia_h * r.rating
    assert aggregate_inertia(fleet) == pytest.approx(28000.0) == brute


def test_aggregate_inertia_skips_tripped():
    fleet = [sync_unit("a", h=4.0), sync_unit("b", h=6.0)]
    after = apply_trip(fleet, "b")
    assert aggregate_inertia(fleet) - aggregate_inertia(after) == pytest.approx(6.0 * 1000.0)


def test_resource_invariants():
    with pytest.raises(ConfigError):
        Resource("x", "SyncGen", p_max=100.0, p_set=150.0)
    with pytest.raises(ConfigError):
        Resource("x", "SyncGen", p_max=100.0, p_set=50.0, headroom=80.0)
    with pytest.raises(ConfigError):
        Resource("x", "SyncGen", p_max=100.0, tau_resp=0.0)
    with pytest.raises(ValueError):
        Resource("x", "SteamEngine", p_max=100.0)


def test_cost_blocks_need_convexity():
    assert cost_blocks(30.0, 0.0, 100.0) == ((100.0, 30.0),)
    with pytest.raises(ConfigError):
        cost_blocks([(50.0, 30.0), (100.0, 20.0)], 0.0, 100.0)


def test_equilibrium_stays_put():
    params = SystemParams(d_load=0.0)
    res = [sync_unit("g", droop=5.0)]
    state = GridState.initial(res, demand=500.0)
    for _ in range(100):
        state = step_coi(state, params, res, 0.0)
    assert state.delta_f == 0.0
    assert state.p_out[0] == 500.0


def test_rocof_matches_analytic():
    # 2 machines, 10,000 MW s in total, no control
    res = [sync_unit("a", h=5.0), sync_unit("b", h=5.0)]
    params = SystemParams(f0=50.0, d_load=0.0)
    state = GridState.initial(res, demand=1000.0)
    new = step_coi(state, params, res, 100.0)
    rocof = new.delta_f / params.dt
    assert rocof == pytest.approx(-100.0 * 50.0 / (2 * 10000.0), rel=1e-12)


def test_first_order_lag_step():
    r = Resource("b", "Bess", p_max=200.0, p_min=-200.0, tau_resp=1.0, inertia_h=0.0)
    g = sync_unit("g", h=1e6)  # huge inertia keeps delta_f ~ 0
    state = GridState.initial([r, g])
    state.sp_next[0] = 100.0
    state.sp_prev[0] = 100.0
    fleet = Fleet([r, g])
    fleet.integrate(state, SystemParams(d_load=0.0), np.zeros(100))
    assert state.p_out[0] == pytest.approx(100.0 * (1.0 - math.exp(-1.0)), rel=1e-6)


def test_ramp_rate_limits_output():
    r = Resource("b", "Bess", p_max=200.0, p_min=-200.0, tau_resp=0.01, ramp_rate=60.0)  # 1 MW/s
    g = sync_unit("g", h=1e6)
    state = GridState.initial([r, g])
    state.sp_prev[0] = state.sp_next[0] = 100.0
    Fleet([r, g]).integrate(state, SystemParams(d_load=0.0), np.zeros(500))
    assert state.p_out[0] == pytest.approx(5.0, rel=1e-6)


def test_time_error_tracks_integral_of_deviation():
    res = [sync_unit("a", h=5.0)]
    params = SystemParams(d_load=0.0)
    state = GridState.initial(res, demand=500.0)
    rec = Fleet(res).integrate(state, params, np.full(1000, 10.0))
    df = np.append(rec[0], state.delta_f)
    # trapezoid on the recorded samples approximates the RK4 quadrature closely
    te = trapezoid(df, dx=params.dt) / params.f0
    assert state.time_error == pytest.approx(te, rel=1e-6)


def test_trip_zeroes_output_and_logs():
    res = [sync_unit("a", p_set=500.0), sync_unit("b", p_set=500.0)]
    state = GridState.initial(res, demand=1000.0)
    assert lost_infeed(res, "b", state) == -500.0
    after = apply_trip(res, "b", state)
    assert not after[1].online and res[1].online
    assert state.p_out[1] == 0.0
    assert state.trips == [(0.0, "b")]
    with pytest.raises(ConfigError):
        apply_trip(after, "b")
    with pytest.raises(ConfigError):
        apply_trip(after, "zz")


def test_tripped_unit_stays_at_zero():
    res = [sync_unit("a", droop=5.0), sync_unit("b", droop=5.0)]
    params = SystemParams()
    state = GridState.initial(res, demand=1000.0)
    fleet = Fleet(res)
    fleet.trip("b", state)
    fleet.integrate(state, params, np.zeros(2000))
    assert state.p_out[1] == 0.0
    assert state.delta_f < 0


def test_zero_inertia_rejected():
    r = Resource("w", "WindPlant", p_max=100.0, p_set=50.0)
    with pytest.raises(ConfigError):
        step_coi(GridState.initial([r]), SystemParams(), [r], 0.0)


def test_non_finite_state_reports_time_and_culprit():
    res = [sync_unit("a")]
    state = GridState.initial(res, demand=500.0)
    dist = np.zeros(50)
    dist[20] = np.nan
    with pytest.raises(NumericalError) as err:
        Fleet(res).integrate(state, SystemParams(), dist)
    assert err.value.t == pytest.approx(0.2)
    assert err.value.culprit == "delta_f"


@settings(max_examples=30, deadline=None)
@given(dp=st.floats(-500, 500), h=st.floats(1.0, 10.0))
def test_power_bookkeeping_per_step(dp, h):
    # with lags at rest and no damping the first RK4 step is exact
    res = [sync_unit("a", h=h)]
    params = SystemParams(d_load=0.0)
    state = GridState.initial(res, demand=500.0)
    new = step_coi(state, params, res, dp)
    m = 2 * aggregate_inertia(res) / params.f0
    assert m * (new.delta_f - state.delta_f) / params.dt == pytest.approx(-dp, abs=1e-9)
