"""Droop vs. contracted response curves, and the reserve arithmetic.

Evaluates each product at a few deviations for a 100 MW contract, then
checks the fleet-level droop arithmetic for a 20 GW battery fleet.
"""
import numpy as np

from gridfreq import (dynamic_containment, dynamic_moderation, dynamic_regulation, piecewise_response,
                      reserve_calc)

grid = np.array([-500, -200, -150, -100, -50, -15, 0, 15, 50, 100, 150, 200, 500]) / 1000.0
products = {"DR": dynamic_regulation(), "DM": dynamic_moderation(), "DC": dynamic_containment()}
print("df [mHz] " + "".join(f"{int(f * 1000):>7d}" for f in grid))
for name, curve in products.items():
    print(f"{name:>8s} " + "".join(f"{piecewise_response(f, curve, 100.0):7.1f}" for f in grid))

print()
base = reserve_calc(20000.0, 1.7, 150.0, 15.0)
print(f"20 GW at 1.7 % droop, 15 mHz deadband, 150 mHz deviation: {base:.0f} MW")
print(f"each further 10 mHz adds {reserve_calc(20000.0, 1.7, 160.0, 15.0) - base:.0f} MW")
