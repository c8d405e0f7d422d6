"""
Equilibria of the phase-swing dynamics before and during a fault
=================================================================

The PLL angle settles where the line drop v_zq balances v_gcp * sin(delta).
Unity power factor at 1 pu puts the operating point at asin(0.28). Deep sags
switch the converter to full reactive current, after which the drop is
-i_max * r_line = -0.1 pu and the equilibria vanish below 0.1 pu.
"""
import numpy as np

from pllsync import GridParams, equilibria, grid_code_current

grid = GridParams()

print(f"{'v_gcp':>6} {'i_d':>6} {'i_q':>6} {'kind':>7} {'sep':>9} {'uep':>9}")
for v in np.array([1.0, 0.8, 0.5, 0.3, 0.14, 0.101, 0.10, 0.09]):
    ref = grid_code_current(v)
    eq = equilibria(ref, v, grid)
    sep = "-" if eq.sep is None else f"{eq.sep:9.4f}"
    uep = "-" if eq.uep is None else f"{eq.uep:9.4f}"
    print(f"{v:6.3f} {ref.i_d:6.3f} {ref.i_q:6.3f} {eq.kind.value:>7} {sep:>9} {uep:>9}")

# %%
# The sag to 0.14 pu leaves a pair of equilibria, so a well damped loop can
# settle at the new SEP. At 0.10 pu the two points merge at -pi/2.
