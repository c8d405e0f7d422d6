"""
Critical damping ratio against sag depth
========================================

With full reactive current the fault depth is set by |v_zq| / v_gcp. For
each ratio the search raises zeta from 0.1 in steps of 0.05 until the
sustained-fault response converges, then bisects to 1e-3.
"""
from pllsync import critical_zeta_curve

ratios = [0.3, 0.5, 0.6, 0.71, 0.8, 0.9, 1.0]
for r in critical_zeta_curve(ratios, workers=4):
    z = "none" if r.zeta_crit is None else f"{r.zeta_crit:.3f}"
    print(f"ratio {r.ratio:4.2f}  v_gcp {0.1 / r.ratio:5.3f} pu  zeta_crit {z:>6}  ({r.status})")
