"""
Functional change of variable for path-dependent functionals
============================================================

F(t, w) = w(t)^2 splits into a compensated-sum integral and a finite
variation part A, which tracks the quadratic variation t.
"""

import numpy as np

from pathvar import generate_fbm
from pathvar.functions import monomial
from pathvar.calculus import endpoint_functional, isometry_check, rough_smooth_decompose

F = endpoint_functional(monomial(2))
S = generate_fbm(0.5, 1.0, 2 ** 14, seed=5)
times = np.linspace(0, 1, 5)

dec = rough_smooth_decompose(F, S, "uniform", 2, times, [8, 10, 12])
print("A_12(t) at", times, "->", np.round(dec.A[12], 3))
print("variation of A per level:", {n: f"{v:.1e}" for n, v in dec.A_variation.items()})

iso = isometry_check(F, S, "uniform", 2, None, [8, 12])
for n in (8, 12):
    print(f"n={n}: [F]^2 {iso.lhs[n][-1]:.4f}  vs  int |grad F|^2 d[S] {iso.rhs[n][-1]:.4f}")
