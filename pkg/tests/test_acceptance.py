"""Acceptance suite: one PASS/FAIL line per criterion.

Ensembles use 64 paths.  Where a Lebesgue partition must resolve level ``n``
the horizon is shrunk to ``2**-2a``; by Brownian scaling level ``n`` there
plays the role of level ``n - a`` on the unit interval.
"""

import json

import numpy as np
import pytest

from pathvar.calculus import (change_of_variable_residual, compensated_integral,
                              endpoint_functional, functional_change_of_variable_residual,
                              isometry_check, rough_smooth_decompose, telescoping_check)
from pathvar.ensemble import run_ensemble
from pathvar.functions import cos, monomial, polynomial, ramp
from pathvar.localtime import (averaging_operator, conjecture_experiment, local_time_upcrossing,
                               occupation_density, probe_panel, spatial_grid, tanaka_residual,
                               weak_pairing)
from pathvar.partitions import PartitionSequence, uniform_dyadic
from pathvar.paths import generate_fbm
from pathvar.roughpath import (canonical_lift, check_reduced_chen, controlled_from_function,
                               integral_equivalence_check, random_triples, rough_integral)
from pathvar.variation import pth_variation_scalar, pth_variation_tensor, signed_pth_sums

PATHS = 64


@pytest.fixture
def verdict(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail
    return emit


def _median(rows):
    return np.median(np.asarray(rows, dtype=float), axis=0)


def test_criterion_1_exact_identities(verdict):
    B = generate_fbm(0.5, 1.0, 2 ** 14, seed=101)
    times = np.linspace(0, 1, 9)
    worst = {}

    worst["telescoping"] = max(telescoping_check(cos(), B, uniform_dyadic(n), t)
                               for n in (0, 5, 10, 14) for t in (0.3, 1.0))

    mono = 0.0
    for p in (2, 4):
        for m in range(1, p):
            f = monomial(m)
            ref = f(B(times)) - f(B.x[:1])[0]
            prof = compensated_integral(f, B, "uniform", p, times, [4, 9, 13])
            for n in prof.levels:
                mono = max(mono, np.max(np.abs(prof.values[n] - ref)) / max(1, np.max(np.abs(ref))))
        prof = change_of_variable_residual(monomial(p), B, "uniform", p, times, [4, 9, 13])
        scale = max(1.0, float(np.max(np.abs(prof.lhs))))
        for n in prof.levels:
            mono = max(mono, np.max(np.abs(prof.residuals[n])) / scale)
    worst["monomial"] = mono

    tan = 0.0
    # Lebesgue levels up to 8 need the finer path on [0, 2^-8]
    C = generate_fbm(0.5, 2.0 ** -8, 2 ** 16, seed=104)
    for S, scheme, levels in ((B, "uniform", range(0, 15)), (C, "lebesgue", range(0, 9))):
        seq = PartitionSequence(scheme, S)
        for p in (2, 4):
            for a in (-0.03, 0.0, 0.02):
                f = ramp(a, p - 1)
                scale = max(1.0, abs(float(f(S.x[-1:])[0])))
                for n in levels:
                    tan = max(tan, abs(tanaka_residual(f, S, seq(n), p)) / scale)
    worst["tanaka"] = tan

    chen = 0.0
    for S in (B, generate_fbm(0.5, 1.0, 1024, seed=102, dim=2)):
        for p in (2, 4):
            for var in ("grid", 6):
                X = canonical_lift(S, p, var)
                chen = max(chen, check_reduced_chen(X, random_triples(1.0, 300, p)).defects.max())
    worst["chen"] = chen

    x = spatial_grid(B, 6)
    vals = np.random.default_rng(0).standard_normal(len(x))
    avg = 0.0
    for n in range(0, 6):
        once = averaging_operator(vals, x, n)
        avg = max(avg, np.max(np.abs(averaging_operator(once, x, n) - once)))
    worst["averaging"] = avg

    V = generate_fbm(0.5, 1.0, 4096, seed=103, dim=3)
    cons = 0.0
    rng = np.random.default_rng(1)
    for p in (2, 4):
        tens = pth_variation_tensor(V, "uniform", p, [3, 8, 12], times)
        for _ in range(5):
            v = rng.standard_normal(3)
            scal = pth_variation_scalar(V.component(v), "uniform", p, [3, 8, 12], times)
            paired = tens.paired(v)
            for n in (3, 8, 12):
                cons = max(cons, np.max(np.abs(paired[n] - scal[n]) / np.maximum(scal[n], 1e-300)))
    worst["tensor_scalar"] = cons

    ok = all(v < 1e-9 for k, v in worst.items() if k != "chen") and worst["chen"] < 1e-12
    verdict(1, ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_criterion_2_fbm_variation(verdict):
    out = []
    ok = True
    for hurst, p, target in ((0.5, 2, 1.0), (0.25, 4, 3.0)):
        def job(i, hurst=hurst, p=p):
            S = generate_fbm(hurst, 1.0, 2 ** 16, seed=200, path_index=i)
            return pth_variation_scalar(S, "uniform", p, [14])[14][0] / S.horizon
        m = float(np.median(run_ensemble(job, PATHS)))
        ok &= abs(m / target - 1) < 0.10
        out.append(f"H={hurst} p={p} median {m:.3f} vs {target}")
    verdict(2, ok, "; ".join(out))


def test_criterion_3_change_of_variable(verdict):
    out = []
    ok = True
    for hurst, p in ((0.5, 2), (0.25, 4)):
        def job(i, hurst=hurst, p=p):
            S = generate_fbm(hurst, 1.0, 2 ** 16, seed=300, path_index=i)
            prof = change_of_variable_residual(cos(), S, "uniform", p, None, [8, 12])
            scale = 1 + abs(float(np.cos(S.x[-1])))
            return abs(prof.residuals[8][0]), abs(prof.residuals[12][0]), \
                abs(prof.residuals[12][0]) / scale
        r8, r12, rel12 = _median(run_ensemble(job, PATHS))
        ok &= rel12 < 0.02 and r12 / r8 < 0.5
        out.append(f"H={hurst} p={p} rel12 {rel12:.2e} ratio {r12 / r8:.3f}")
    verdict(3, ok, "; ".join(out))


def test_criterion_4_functional(verdict):
    F = endpoint_functional(monomial(2))
    levels = [8, 10, 12]

    def job(i):
        S = generate_fbm(0.5, 1.0, 2 ** 14, seed=400, path_index=i)
        res = functional_change_of_variable_residual(F, S, "uniform", 2, None, [12])
        scale = 1 + abs(S.x[-1] ** 2 - S.x[0] ** 2)
        iso = isometry_check(F, S, "uniform", 2, None, [12])
        dec = rough_smooth_decompose(F, S, "uniform", 2, None, levels)
        return [abs(res.residuals[12][0]) / scale, iso.gap[12] / iso.rhs[12][-1],
                dec.A[12][0] / S.horizon] + [dec.A_variation[n] for n in levels]

    med = _median(run_ensemble(job, PATHS))
    res, gap, a_ratio, av = med[0], med[1], med[2], med[3:]
    ok = res < 0.05 and gap < 0.05 and abs(a_ratio - 1) < 0.07 and bool(np.all(np.diff(av) < 0))
    verdict(4, ok, f"residual {res:.1e}, isometry gap {gap:.3f}, A(T)/T {a_ratio:.3f}, "
                   f"[A]^2 {' > '.join(f'{v:.1e}' for v in av)}")


def test_criterion_5_odd_p(verdict):
    levels = list(range(8, 13))

    def job(i):
        S = generate_fbm(0.5, 2.0 ** -12, 2 ** 18, seed=500, path_index=i)
        prof = signed_pth_sums(S, "lebesgue", 3, levels)
        return [abs(prof[n][0]) for n in levels]

    med = _median(run_ensemble(job, PATHS))
    ok = bool(np.all(np.diff(med) < 0)) and med[-1] < 0.05
    verdict(5, ok, "median |sum| " + ", ".join(f"{v:.1e}" for v in med))


def test_criterion_6_local_time(verdict):
    n = 10

    def job(i):
        S = generate_fbm(0.5, 2.0 ** -10, 2 ** 18, seed=600, path_index=i)
        L = local_time_upcrossing(S, n, 2)
        occ = occupation_density(S, n=n)
        rel = []
        for g in probe_panel(S).values():
            ref = weak_pairing(occ, g)
            rel.append(abs(2 * weak_pairing(L, g) - ref) / ref)
        ex = L.extras
        bound_ok = bool(np.all(np.abs(ex["raw"] - ex["crossing_form"]) <= ex["consistency_bound"] + 1e-15))
        return rel, bound_ok

    out = run_ensemble(job, PATHS)
    med = _median([o[0] for o in out])
    bound = all(o[1] for o in out)
    ok = bool(np.all(med < 0.25)) and bound
    verdict(6, ok, "median relative pairing gaps " + ", ".join(f"{v:.3f}" for v in med)
            + f"; consistency bound {'holds' if bound else 'violated'}")


def test_criterion_7_rough_path(verdict):
    def sew(i):
        S = generate_fbm(0.5, 1.0, 2 ** 12, seed=700, path_index=i)
        X = canonical_lift(S, 2, 12)
        Y = controlled_from_function(polynomial([0.0, 0.0, 0.5]), S, 2)
        val = rough_integral(Y, X, max_level=12).value
        ref = (S.x[-1] ** 2 - S.x[0] ** 2) / 2 - X.variation[-1, 0] / 2
        return abs(val - ref) / abs(ref)

    sew_err = float(np.median(run_ensemble(sew, PATHS)))
    levels = (6, 8, 10, 12)

    def eq(i):
        S = generate_fbm(0.25, 1.0, 2 ** 16, seed=701, path_index=i)
        rep = integral_equivalence_check(cos(), S, 4, levels)
        return [rep.gaps[n] for n in levels]

    gaps = _median(run_ensemble(eq, PATHS))
    ratios = gaps[1:] / gaps[:-1]
    overall = gaps[-1] / gaps[0]
    ok = sew_err < 0.01 and bool(np.all(ratios < 1)) and overall < 0.7
    verdict(7, ok, f"sewing relative error {sew_err:.1e}; equivalence gap ratio "
                   f"{overall:.3f} over levels {levels[0]}..{levels[-1]}, stepwise "
                   + ", ".join(f"{r:.3f}" for r in ratios))


def test_criterion_8_crossing_occupation(verdict, tmp_path):
    known = conjecture_experiment(0.5, levels=range(6, 11), num_paths=PATHS, seed=800,
                                  horizon=2.0 ** -10, num_steps=2 ** 20)
    rough = conjecture_experiment(0.25, levels=range(6, 11), num_paths=PATHS, seed=801,
                                  num_steps=2 ** 16)
    (tmp_path / "conjecture_quarter.json").write_text(json.dumps(rough.to_json()))
    g = known.median_gap()
    ok = known.gap_decreasing and not rough.degenerate
    verdict(8, ok, "H=0.5 median sup-gap " + ", ".join(f"{g[n]:.3f}" for n in known.levels)
            + "; H=0.25 report generated, median sup-gap "
            + ", ".join(f"{v:.3f}" for v in rough.median_gap().values()))
