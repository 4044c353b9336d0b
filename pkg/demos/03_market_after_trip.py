"""A unit trips mid-interval; the market replaces it at the next boundary.

No out-of-cycle clearing: the 300 s schedule excludes the tripped unit and
its ramp brings the delivered setpoints back to the forecast.
"""
import numpy as np

from gridfreq import DisturbanceConfig, OuParams, Trip, run_scenario
from gridfreq.presets import s2_conv_agc_pfc

cfg = s2_conv_agc_pfc(duration=900.0)
cfg.disturbances = DisturbanceConfig(ou=OuParams(sigma=0.0), trips=[Trip(130.0, "G2")])
res = run_scenario(cfg)

for s in res.schedules:
    units = ", ".join(f"{k}={v:.0f}" for k, v in s.setpoints.items() if k.startswith("G"))
    print(f"t={s.t_clear:5.0f} s  reserve req {s.requirement:6.0f} MW  {units}")

c = res.columns
for t_probe in (120.0, 200.0, 300.0, 450.0, 600.0, 890.0):
    i = int(np.argmin(np.abs(c["t_s"] - t_probe)))
    print(f"t={c['t_s'][i]:6.1f} s  market {c['p_market_mw'][i]:7.1f} MW  pfc {c['p_pfc_mw'][i]:7.1f} MW  "
          f"agc {c['p_agc_mw'][i]:7.1f} MW  df {c['delta_f_mhz'][i]:7.1f} mHz")
