"""Built-in scenarios: a 7 GW island with four synchronous units, 3 GW of wind,
two batteries and an importing HVDC link.

=================  ======================================================
s1-conv-agc        conventional PFC + AGC, wind not providing PFC
s2-conv-agc-pfc    as s1 with wind providing downward-only PFC
s3-conv-pfc        as s2 without AGC
s4-ibr             synchronous units replaced by grid-forming converters
=================  ======================================================

All four clear a five-minute market against the same seeded disturbances.
"""
from __future__ import annotations

from dataclasses import replace

from .controllers import AgcSettings, PfcSettings
from .disturbances import DisturbanceConfig, JumpParams, OuParams, daily_ramps
from .grid import Resource, SystemParams
from .market import MarketSettings
from .scenario import ScenarioConfig

DEMAND_MW = 7000.0
SYNC_COSTS = (40.0, 48.0, 57.0, 68.0)


def sync_gens(deadband=15.0, droop=5.0):
    return [Resource(f"G{i + 1}", "SyncGen", p_max=1600.0, p_min=400.0, p_set=875.0, rating=1750.0,
                     inertia_h=3.0, tau_resp=5.0, ramp_rate=1200.0,
                     pfc=PfcSettings(deadband=deadband, droop_pct=droop),
                     cost=[(1000.0, c), (1600.0, c + 6.0)])
            for i, c in enumerate(SYNC_COSTS)]


def gfm_converters(deadband=15.0, droop=2.0, virtual_h=2.0):
    return [Resource(f"C{i + 1}", "GfmConverter", p_max=1600.0, p_min=400.0, p_set=875.0, rating=1750.0,
                     inertia_h=virtual_h, tau_resp=0.1, ramp_rate=1200.0,
                     pfc=PfcSettings(deadband=deadband, droop_pct=droop),
                     cost=[(1000.0, c), (1600.0, c + 6.0)])
            for i, c in enumerate(SYNC_COSTS)]


def wind_plants(pfc_enabled=True, deadband=15.0, droop=4.0):
    return [Resource(f"W{i + 1}", "WindPlant", p_max=1000.0, p_set=1000.0, tau_resp=0.5,
                     downward_only=True, dispatchable=False,
                     pfc=PfcSettings(deadband=deadband, droop_pct=droop, enabled=pfc_enabled, mandatory=False))
            for i in range(3)]


def batteries(deadband=15.0, droop=2.0):
    return [Resource(f"B{i + 1}", "Bess", p_max=150.0, p_min=-150.0, p_set=0.0, tau_resp=0.2,
                     dispatchable=False, pfc=PfcSettings(deadband=deadband, droop_pct=droop, fat=1.0))
            for i in range(2)]


def hvdc_import(mw=500.0):
    return Resource("HVDC1", "HvdcLink", p_max=mw, p_min=-mw, p_set=mw, tau_resp=0.2, dispatchable=False)


def standard_disturbances(seed=0):
    return DisturbanceConfig(ou=OuParams.ten_percent_band(DEMAND_MW, theta=0.1), ramps=daily_ramps(),
                             jumps=JumpParams(magnitude=2.5, rate=4.0, duration=60.0), seed=seed)


def _scenario(name, resources, agc_enabled, seed=0, duration=86400.0):
    return ScenarioConfig(name=name, demand=DEMAND_MW, resources=resources,
                          system=SystemParams(f0=50.0, s_base=DEMAND_MW, d_load=1.0, dt=0.01),
                          agc=AgcSettings(enabled=agc_enabled), market=MarketSettings(),
                          disturbances=standard_disturbances(seed), duration=duration)


def s1_conv_agc(seed=0, duration=86400.0):
    res = sync_gens() + wind_plants(pfc_enabled=False) + batteries() + [hvdc_import()]
    return _scenario("s1-conv-agc", res, True, seed, duration)


def s2_conv_agc_pfc(seed=0, duration=86400.0):
    res = sync_gens() + wind_plants(pfc_enabled=True) + batteries() + [hvdc_import()]
    return _scenario("s2-conv-agc-pfc", res, True, seed, duration)


def s3_conv_pfc(seed=0, duration=86400.0):
    return replace(s2_conv_agc_pfc(seed, duration), name="s3-conv-pfc",
                   agc=AgcSettings(enabled=False))


def s4_ibr(seed=0, duration=86400.0):
    res = gfm_converters() + wind_plants(pfc_enabled=True) + batteries() + [hvdc_import()]
    return _scenario("s4-ibr", res, False, seed, duration)


PRESETS = {
    "s1-conv-agc": s1_conv_agc,
    "s2-conv-agc-pfc": s2_conv_agc_pfc,
    "s3-conv-pfc": s3_conv_pfc,
    "s4-ibr": s4_ibr,
}
