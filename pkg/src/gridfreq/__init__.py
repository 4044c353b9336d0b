"""Aggregate power-system frequency-control simulator.

Centre-of-inertia swing dynamics with droop/deadband primary control,
integral AGC, a five-minute energy market with reserve requirements,
seeded load disturbances and frequency-quality metrics.
"""
from .controllers import (AgcSettings, DeadbandMode, PfcSettings, PiecewiseResponseCurve,
                          adaptive_deadband_switch, agc_step, apply_deadband, dynamic_containment,
                          dynamic_moderation, dynamic_regulation, pfc_response, piecewise_response)
from .disturbances import (DisturbanceConfig, DisturbanceSample, JumpParams, OuParams, Ramp, Trip,
                           daily_ramps, ou_path, ou_step, ramp_value, sample_jumps)
from .errors import ConfigError, GridFreqError, MarketInfeasibleError, NumericalError
from .grid import (GridState, Resource, ResourceKind, SystemParams, aggregate_inertia, apply_trip,
                   step_coi)
from .market import (DispatchSchedule, ForecastError, MarketSettings, ReserveRule, clear_market,
                     forecast_demand, ramp_setpoints, redispatch_after_contingency)
from .metrics import (FrequencyTrace, MetricsReport, compute_metrics, compute_sigma, nadir_zenith,
                      pct_out_of_range, recovery_time, skewness, time_error)
from .presets import PRESETS
from .scenario import (Comparison, DeadbandSwitch, RunResult, ScenarioConfig, compare_scenarios,
                       load_config, reserve_calc, run_scenario)

__version__ = "0.1.0"
