"""Choosing the guide vertex count for a synthetic dome deployment.

Ten points on a flattening spherical cap give synchronized, curved
deployment paths. Piecewise-linear guides can only follow them up to a
deviation set by the number of interior vertices n. This script sweeps
n, prints the assembly-energy decay, and picks the smallest n whose
worst deviation drops below the 4 mm lamella half-thickness, i.e. the
point where guide error disappears inside the physical member.

Run:  python3 demos/dome_reparam.py   (about 1 min)
"""
import numpy as np

from gridguide.models import dome_traceset
from gridguide.reparam import GAConfig, select_n

trace = dome_traceset(m=10, samples=1000, half_span=4.0, curvature=0.15)
r = 0.004  # half the 8 mm lamella thickness budget, in meters

cfg = GAConfig(population=40, generations=80, restarts=2)
res = select_n(trace, r=r, n_max=12, config=cfg)

print(" n   sqrt(E_ass) [mm]")
for n, energy in res.sweep:
    marker = "  <- chosen" if n == res.n and res.threshold_met else ""
    print(f"{n:2d}   {np.sqrt(energy) * 1000:12.3f}{marker}")

if res.threshold_met:
    knots = ", ".join(f"{t:.3f}" for t in res.knots.knots)
    print(f"\nn={res.n} meets sqrt(E_ass) < {r * 1000:.0f} mm; knots [{knots}]")
else:
    print(f"\nthreshold {r * 1000:.0f} mm not reached within n <= 12")
