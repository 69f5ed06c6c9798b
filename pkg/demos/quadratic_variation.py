"""
Quadratic variation along dyadic partitions
===========================================

Sums of squared increments of a Brownian path settle near the elapsed time,
while the quartic sums of a rougher fractional path settle near 3t.
"""

import numpy as np

from pathvar import generate_fbm, pth_variation_scalar

# a Brownian path and a fractional path with Hurst index 1/4
B = generate_fbm(0.5, 1.0, 2 ** 16, seed=1)
R = generate_fbm(0.25, 1.0, 2 ** 16, seed=1)

times = np.linspace(0, 1, 5)
for label, S, p in (("H=0.50, p=2", B, 2), ("H=0.25, p=4", R, 4)):
    prof = pth_variation_scalar(S, "uniform", p, range(8, 15, 2), times)
    print(label)
    for n in prof.levels:
        print(f"  n={n:2d}", np.round(prof[n], 3))

# the same sums along Lebesgue partitions, generated by the path itself
prof = pth_variation_scalar(B, "lebesgue", 2, [3, 4, 5, 6])
print("Lebesgue, H=0.50:", [round(float(prof[n][0]), 3) for n in prof.levels])
