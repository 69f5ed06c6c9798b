"""
Crossing counts against occupation densities
============================================

For Brownian motion the normalised upcrossing local time approaches the
occupation density; the same statistic is reported for Hurst index 1/4.
"""

from pathvar.localtime import conjecture_experiment

known = conjecture_experiment(0.5, levels=range(6, 11), num_paths=16, seed=0,
                              horizon=2.0 ** -10, num_steps=2 ** 18)
print("H=0.50 median sup-gap:", {n: round(v, 3) for n, v in known.median_gap().items()})
print("H=0.50 median mass ratio:", {n: round(v, 3) for n, v in known.median_mu_ratio().items()})

rough = conjecture_experiment(0.25, levels=range(4, 9), num_paths=16, seed=0, num_steps=2 ** 16)
print("H=0.25 median sup-gap:", {n: round(v, 3) for n, v in rough.median_gap().items()})
print("H=0.25 unresolved paths per level:", rough.unresolved)
