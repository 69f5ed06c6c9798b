import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pathvar.ensemble import run_ensemble
from pathvar.functions import cos, monomial, polynomial, quadratic_form
from pathvar.paths import generate_analytic, generate_fbm
from pathvar.roughpath import (canonical_lift, check_reduced_chen, controlled_from_function,
                               discrete_qvar_table, integral_equivalence_check, linear_control,
                               qvar_control, random_triples, rough_integral)
from pathvar.tensors import sym_power_coeffs
from pathvar.variation import pth_variation_scalar, pth_variation_tensor


@pytest.fixture(scope="module")
def line():
    return generate_analytic("line", {"slope": [1.0, -0.5]}, 1.0, 1024)


@pytest.fixture(scope="module")
def bm():
    return generate_fbm(0.5, 1.0, 2 ** 12, seed=11)


def test_line_lift_levels(line):
    X = canonical_lift(line, 4, "zero")
    s, t = np.array([0.1, 0.3]), np.array([0.6, 0.3])
    lv = X.levels(s, t)
    v = np.array([1.0, -0.5])
    for k in range(5):
        ref = np.stack([sym_power_coeffs(v * (b - a), k) / math.factorial(k) for a, b in zip(s, t)])
        np.testing.assert_allclose(lv[k], ref, atol=1e-15)
    # diagonal pairs vanish above level 0
    for k in range(1, 5):
        assert np.all(lv[k][1] == 0)


def test_brownian_lift_with_linear_variation(bm):
    X = canonical_lift(bm, 2, bm.times)
    s, t = np.array([0.0, 0.25]), np.array([0.5, 0.8])
    dS = bm(t)[:, 0] - bm(s)[:, 0]
    np.testing.assert_allclose(X.levels(s, t)[2][:, 0], dS ** 2 / 2 - (t - s) / 2, atol=1e-14)


@pytest.mark.parametrize("p, variation", [(2, "grid"), (2, 6), (4, "grid"), (4, 9)])
def test_chen_exact_for_scalar_lifts(bm, p, variation):
    X = canonical_lift(bm, p, variation)
    rep = check_reduced_chen(X, random_triples(1.0, 500, seed=p))
    assert rep.passed and rep.defects.max() < 1e-12


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), p=st.sampled_from([2, 4]), snap=st.booleans())
def test_chen_exact_for_vector_lifts(seed, p, snap):
    S = generate_fbm(0.5, 1.0, 1024, seed=seed, dim=2)
    X = canonical_lift(S, p, "grid")
    tr = random_triples(1.0, 200, seed, S.times if snap else None)
    assert check_reduced_chen(X, tr).defects.max() < 1e-12


def test_chen_from_variation_profiles(bm):
    prof = pth_variation_scalar(bm, "uniform", 2, [8], eval_times=bm.times)
    X = canonical_lift(bm, 2, prof)
    assert check_reduced_chen(X, random_triples(1.0, 300)).passed
    S = generate_fbm(0.5, 1.0, 256, seed=2, dim=2)
    tprof = pth_variation_tensor(S, "uniform", 2, [6], S.times)
    assert check_reduced_chen(canonical_lift(S, 2, tprof), random_triples(1.0, 300)).passed
    with pytest.raises(ValueError):
        canonical_lift(S, 4, tprof)


def test_corrupted_top_level_flagged(bm):
    X = canonical_lift(bm, 2, "grid").with_top_shift(0.1)
    rep = check_reduced_chen(X, random_triples(1.0, 50))
    assert not rep.passed
    assert rep.defects[2] == pytest.approx(0.1, rel=1e-9)
    assert rep.defects[1] < 1e-12


def test_lift_errors(bm):
    with pytest.raises(ValueError):
        canonical_lift(bm, 3)
    with pytest.raises(ValueError):
        canonical_lift(bm, 2, "exact")
    with pytest.raises(ValueError):
        canonical_lift(bm, 2, np.zeros(7))


def test_qvar_control_examples():
    S = generate_analytic("line", {"slope": 1.0}, 1.0, 64)
    c = qvar_control(S, 1.0)
    s, t = np.array([0.0, 0.25, 0.5]), np.array([1.0, 0.5, 0.5])
    np.testing.assert_allclose(c(s, t), t - s, atol=1e-14)
    with pytest.raises(ValueError):
        qvar_control(S, 0.5)
    with pytest.raises(ValueError):
        qvar_control(generate_analytic("line", {"slope": 1.0}, 1.0, 2048), 2.0)


def test_qvar_table_matches_enumeration():
    x = np.random.default_rng(0).standard_normal(8)
    C = discrete_qvar_table(x, 2.5)
    # enumerate every sub-partition of the full index range
    best = 0.0
    for mask in range(2 ** 6):
        pts = [0] + [i + 1 for i in range(6) if mask >> i & 1] + [7]
        best = max(best, sum(abs(x[b] - x[a]) ** 2.5 for a, b in zip(pts, pts[1:])))
    assert C[0, 7] == pytest.approx(best, rel=1e-12)
    assert np.all(np.diag(C) == 0)


def test_qvar_control_superadditive_and_monotone():
    S = generate_fbm(0.5, 1.0, 512, seed=4)
    c = qvar_control(S, 3.0)
    tr = random_triples(1.0, 1000, seed=0, grid=S.times)
    assert c.superadditivity_defect(tr) <= 1e-12
    s, u, t = tr.T
    assert np.all(c(s, t) >= c(u, t) - 1e-15) and np.all(c(s, t) >= c(s, u) - 1e-15)
    assert np.all(c(t, t) == 0)
    both = c + linear_control(2.0)
    assert both.superadditivity_defect(tr) <= 1e-12
    np.testing.assert_allclose(both(s, t), c(s, t) + 2 * (t - s))


def test_controlled_identity(bm):
    X = canonical_lift(bm, 4, "grid")
    Y = controlled_from_function(monomial(1), bm, 4)
    assert np.all(Y.components[1] == 1) and all(np.all(Y.components[k] == 0) for k in (2, 3, 4))
    i, j = np.array([0, 100, 7]), np.array([4096, 2000, 9])
    for r in Y.remainders(X, i, j):
        np.testing.assert_allclose(r, 0.0, atol=1e-15)


def test_controlled_quadratic_remainders_vanish(bm):
    X = canonical_lift(bm, 2, "grid")
    Y = controlled_from_function(polynomial([0.0, 0.0, 0.5]), bm, 2)
    np.testing.assert_array_equal(Y.components[2], 1.0)
    i, j = np.arange(0, 4000, 97), np.arange(50, 4050, 97)
    for r in Y.remainders(X, i, j):
        np.testing.assert_allclose(r, 0.0, atol=1e-14)


def test_controlled_errors(bm):
    with pytest.raises(ValueError):
        controlled_from_function(cos(), generate_fbm(0.5, 1.0, 64, seed=0, dim=2), 2)
    with pytest.raises(ValueError):
        controlled_from_function(quadratic_form(np.eye(2)), bm, 2)


def test_remainder_constants_stable_across_panels():
    S = generate_fbm(0.25, 1.0, 1024, seed=3)
    q = 4.5
    X = canonical_lift(S, 4, "grid")
    Y = controlled_from_function(cos(), S, 4)
    c = qvar_control(S, q)
    rng = np.random.default_rng(0)
    consts = []
    for _ in range(3):
        ij = np.sort(rng.integers(0, S.num_samples, (500, 2)), axis=1)
        ij = ij[ij[:, 0] < ij[:, 1]]
        consts.append(Y.remainder_constants(X, c, ij[:, 0], ij[:, 1], q))
    consts = np.array(consts)
    assert np.all(np.isfinite(consts)) and np.all(consts < 10)
    assert np.all(consts.max(axis=0) < 3 * consts.min(axis=0))


def test_sewing_identity_on_line():
    S = generate_analytic("line", {"slope": 2.0}, 1.0, 256)
    X = canonical_lift(S, 2, "zero")
    r = rough_integral(controlled_from_function(monomial(1), S, 2), X, t=0.7)
    for v in r.values.values():
        assert v == pytest.approx(1.4, abs=1e-14)


def test_sewing_quadratic_ensemble():
    def job(i):
        S = generate_fbm(0.5, 1.0, 2 ** 12, seed=50, path_index=i)
        X = canonical_lift(S, 2, 12)
        val = rough_integral(controlled_from_function(polynomial([0, 0, 0.5]), S, 2), X).value
        ref = (S.x[-1] ** 2 - S.x[0] ** 2) / 2 - X.variation[-1, 0] / 2
        return abs(val - ref) / abs(ref)
    assert np.median(run_ensemble(job, 64)) < 0.01


def test_sewing_cauchy_trend():
    def job(i):
        S = generate_fbm(0.25, 1.0, 2 ** 12, seed=3, path_index=i)
        X = canonical_lift(S, 4, "grid")
        return rough_integral(controlled_from_function(cos(), S, 4), X).cauchy
    m = np.median(np.array(run_ensemble(job, 64)), axis=0)
    # fitted per-level ratio of the median Cauchy differences
    ratio = 2 ** np.polyfit(np.arange(len(m)), np.log2(m), 1)[0]
    assert ratio < 0.8


def test_sewing_errors(bm):
    X = canonical_lift(bm, 2, "grid")
    Y4 = controlled_from_function(cos(), bm, 4)
    with pytest.raises(ValueError):
        rough_integral(Y4, X)
    S = generate_fbm(0.5, 1.0, 1000, seed=0)
    with pytest.raises(ValueError):
        rough_integral(controlled_from_function(cos(), S, 2), canonical_lift(S, 2, "grid"))
    Y = controlled_from_function(cos(), bm, 2)
    with pytest.raises(ValueError):
        rough_integral(Y, X, max_level=13)
    json.dumps(rough_integral(Y, X, min_level=10).to_json())


def test_equivalence_identity(bm):
    rep = integral_equivalence_check(monomial(1), bm, 2, [4, 8])
    for n in rep.levels:
        assert rep.gaps[n] < 1e-13
        assert rep.rough[n] == pytest.approx(bm.x[-1] - bm.x[0], abs=1e-13)


def test_equivalence_square_brownian():
    S = generate_fbm(0.5, 1.0, 2 ** 12, seed=8)
    rep = integral_equivalence_check(monomial(2), S, 2, [12])
    assert rep.gaps[12] < 1e-2
    json.dumps(rep.to_json())


def test_equivalence_gap_decreases_quarter_hurst():
    levels = (6, 8, 10, 12)

    def job(i):
        S = generate_fbm(0.25, 1.0, 2 ** 16, seed=1, path_index=i)
        rep = integral_equivalence_check(cos(), S, 4, levels)
        return [rep.gaps[n] for n in levels]
    g = np.median(np.array(run_ensemble(job, 64)), axis=0)
    assert np.all(g[1:] / g[:-1] < 0.7)
