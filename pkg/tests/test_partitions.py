import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pathvar.partitions import (Partition, PartitionSequence, ResolutionError, as_sequence,
                                cell_crossings, crossing_counts, lebesgue_dyadic, oscillation,
                                resolution_ok, uniform_dyadic)
from pathvar.paths import PathError, constant_path, generate_analytic, generate_fbm


@pytest.fixture(scope="module")
def line():
    return generate_analytic("line", {"slope": 1.0}, 1.0, 1024)


@pytest.fixture(scope="module")
def sine():
    return generate_analytic("sine", {"amplitude": 1.0, "frequency": 1.0}, 1.0, 2 ** 16)


def brute_lebesgue(x, times, delta):
    """Sequential first-hit search on the linear interpolant."""
    out_t, cur = [0.0], x[0]
    for i in range(len(x) - 1):
        a, b = x[i], x[i + 1]
        if b == a:
            continue
        if b > a:
            levels = np.arange(np.floor(a / delta) + 1, np.floor(b / delta) + 1) * delta
        else:
            levels = np.arange(np.ceil(a / delta) - 1, np.ceil(b / delta) - 1, -1) * delta
        for lvl in levels:
            if lvl != cur:
                out_t.append(times[i] + (lvl - a) / (b - a) * (times[i + 1] - times[i]))
                cur = lvl
    if out_t[-1] < times[-1]:
        out_t.append(times[-1])
    return np.array(out_t)


def test_uniform_examples():
    np.testing.assert_array_equal(uniform_dyadic(1).times, [0, 0.5, 1])
    np.testing.assert_array_equal(uniform_dyadic(0, 3.0).times, [0, 3.0])
    assert uniform_dyadic(5).mesh == pytest.approx(2 * uniform_dyadic(6).mesh)
    with pytest.raises(ValueError):
        uniform_dyadic(-1)


def test_partition_validation():
    with pytest.raises(PathError):
        Partition([0.0])
    with pytest.raises(PathError):
        Partition([0.1, 1.0])
    with pytest.raises(PathError):
        Partition([0.0, 0.5, 0.5, 1.0])


def test_partition_csv(tmp_path):
    f = tmp_path / "part.csv"
    uniform_dyadic(2).to_csv(f)
    lines = f.read_text().split()
    assert lines[0] == "t"
    np.testing.assert_array_equal([float(a) for a in lines[1:]], [0, 0.25, 0.5, 0.75, 1])


def test_lebesgue_line(line):
    part = lebesgue_dyadic(line, 1)
    np.testing.assert_allclose(part.times, [0, 0.5, 1], atol=1e-15)
    assert part.scheme == "lebesgue" and part.level == 1


def test_lebesgue_sine_crossing_times(sine):
    part = lebesgue_dyadic(sine, 1)
    expected = np.array([0, 1, 3, 5, 6, 7, 9, 11, 12]) / 12
    # the interpolant is accurate to O(dt^2) away from the extrema
    np.testing.assert_allclose(part.times, expected, atol=1e-8)


@pytest.mark.parametrize("n", [0, 1, 3, 6])
def test_lebesgue_monotone_path_count(n):
    S = generate_analytic("polynomial", {"coeffs": [0.0, 0.2, 0.8]}, 1.0, 4096)
    part = lebesgue_dyadic(S, n)
    # 2^n crossing intervals; here S(T) = 1 is itself a grid point
    assert part.num_intervals == 2 ** n


def test_lebesgue_terminal_stub():
    S = generate_analytic("line", {"slope": 0.9}, 1.0, 512)
    part = lebesgue_dyadic(S, 2)
    np.testing.assert_allclose(part.times, [0, 0.25 / 0.9, 0.5 / 0.9, 0.75 / 0.9, 1.0])
    assert not part.on_grid[-1]


def test_lebesgue_off_grid_start():
    S = generate_analytic("line", {"slope": 1.0, "intercept": 0.1}, 1.0, 1024)
    part = lebesgue_dyadic(S, 1)
    np.testing.assert_allclose(part.times, [0, 0.4, 0.9, 1.0])
    assert not part.on_grid[0]


def test_resolution_guard():
    S = generate_fbm(0.5, 1.0, 256, seed=0)
    assert not resolution_ok(S, 6)
    with pytest.raises(ResolutionError):
        lebesgue_dyadic(S, 6)
    lebesgue_dyadic(S, 6, check_resolution=False)


def test_lebesgue_rejects_vector_path():
    S = generate_fbm(0.5, 1.0, 64, seed=0, dim=2)
    with pytest.raises(PathError):
        PartitionSequence("lebesgue", S)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 4))
def test_lebesgue_matches_sequential_search(seed, n):
    S = generate_fbm(0.5, 1.0, 2 ** 16, seed=seed)
    part = lebesgue_dyadic(S, n)
    ref = brute_lebesgue(S.x, S.times, 2.0 ** -n)
    np.testing.assert_allclose(part.times, ref, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 6))
def test_lebesgue_values_step_by_delta(seed, n):
    S = generate_fbm(0.5, 1.0, 2 ** 18, seed=seed)
    part = lebesgue_dyadic(S, n)
    v = part.values[:, 0]
    steps = np.abs(np.diff(v[part.on_grid]))
    np.testing.assert_allclose(steps, 2.0 ** -n, rtol=1e-12)
    np.testing.assert_allclose(S(part.times)[:, 0], v, atol=1e-12)


def test_oscillation_examples(line, sine):
    assert oscillation(line, uniform_dyadic(3)) == pytest.approx(1 / 8)
    assert oscillation(constant_path(1.0), uniform_dyadic(2)) == 0.0
    # range of sin(2 pi t) on [0, 1/2] is [0, 1]
    assert oscillation(sine, uniform_dyadic(1)) == pytest.approx(1.0, abs=1e-12)


def test_oscillation_matches_dense_grid():
    S = generate_fbm(0.4, 1.0, 2048, seed=4)
    part = Partition(np.array([0.0, 0.1003, 0.377, 0.61, 1.0]))
    tt = np.union1d(np.linspace(0, 1, 200_001), S.times)
    vals = S(tt)[:, 0]
    ref = 0.0
    for a, b in zip(part.times[:-1], part.times[1:]):
        m = (tt >= a) & (tt <= b)
        ref = max(ref, vals[m].max() - vals[m].min())
    assert oscillation(S, part) == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("scheme, top, tol", [("uniform", 12, 0.1), ("lebesgue", 6, 0.05)])
def test_oscillation_decreases_with_level(scheme, top, tol):
    S = generate_fbm(0.5, 1.0, 2 ** 18, seed=2)
    seq = PartitionSequence(scheme, S)
    osc = [oscillation(S, seq(n)) for n in range(2, top + 1)]
    assert all(b <= a + 1e-12 for a, b in zip(osc, osc[1:]))
    assert osc[-1] < tol


def test_sequence_caches_and_checks_path():
    S = generate_fbm(0.5, 1.0, 1024, seed=0)
    seq = PartitionSequence("uniform", S)
    assert seq(4) is seq(4)
    assert as_sequence(S, seq) is seq
    with pytest.raises(ValueError):
        as_sequence(generate_fbm(0.5, 1.0, 1024, seed=1), seq)
    with pytest.raises(ValueError):
        PartitionSequence("random", S)


def test_crossing_examples(sine, line):
    assert crossing_counts(sine, 1, 0, 1.0) == (1, 1, 2)
    assert crossing_counts(line, 2, 1, 1.0) == (1, 0, 1)
    assert crossing_counts(constant_path(0.3), 1, 0, 1.0) == (0, 0, 0)
    # before the path descends through (0, 1/2] only the upcrossing is complete
    assert crossing_counts(sine, 1, 0, 0.3) == (1, 0, 1)


def brute_crossings(x, delta, k):
    """Count completed traversals of (k delta, (k+1) delta] on a fine grid."""
    lo, hi = k * delta, (k + 1) * delta
    up = down = 0
    state = None
    for v in x:
        if v <= lo:
            if state == "hi":
                down += 1
            state = "lo"
        elif v >= hi:
            if state == "lo":
                up += 1
            state = "hi"
    return up, down


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(-4, 3))
def test_crossings_match_brute_force(seed, k):
    S = generate_fbm(0.5, 1.0, 2 ** 14, seed=seed)
    n = 3
    u, d, total = crossing_counts(S, n, k)
    assert (u, d) == brute_crossings(S.x, 2.0 ** -n, k)
    assert total == u + d
    assert abs(u - d) <= 1


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), t=st.floats(0.0, 1.0))
def test_up_down_differ_by_at_most_one(seed, t):
    S = generate_fbm(0.5, 1.0, 2 ** 16, seed=seed)
    _, up, down = cell_crossings(lebesgue_dyadic(S, 4), t)
    assert np.all(np.abs(up - down) <= 1)
