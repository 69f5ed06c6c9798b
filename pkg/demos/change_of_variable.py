"""
Compensated Riemann sums and the change of variable formula
===========================================================

The compensated sum of cos along a rough path plus the p-th order
correction reproduces cos(S(T)) - cos(S(0)); the residual shrinks with n.
"""

from pathvar import change_of_variable_residual, generate_fbm
from pathvar.functions import cos

for hurst, p in ((0.5, 2), (0.25, 4)):
    S = generate_fbm(hurst, 1.0, 2 ** 16, seed=3)
    prof = change_of_variable_residual(cos(), S, "uniform", p, None, range(6, 15, 2))
    print(f"H={hurst}, p={p}")
    for n in prof.levels:
        print(f"  n={n:2d}  integral {prof.values[n][0]: .5f}  residual {prof.residuals[n][0]: .2e}")
