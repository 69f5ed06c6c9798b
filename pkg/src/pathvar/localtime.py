"""
Order-p local times along partitions.

For a partition ``sigma`` the pre-limit local time is

    L_t(x) = sum_j sign(b_j - a_j)**p 1{x in <<a_j, b_j]]} |b_j - x|**(p-1),
    a_j = S(t_j ^ t),  b_j = S(t_{j+1} ^ t),

with ``<<a, b]] = (a, b]`` if ``b >= a`` and ``(b, a]`` otherwise.  It enters
the exact identity

    f(S_t) - f(S_0) = CRS_n(t) + 1/(p-1)! int L_t(x) d f^{(p-1)}(x),

checked by :func:`tanaka_residual`.  Along dyadic Lebesgue partitions the
local time is compared with the upcrossing average and the occupation
density of the path.

Spatial grids are cell-centred: ``2**(-n-3)`` spacing, eight midpoints per
dyadic cell ``I_k = (k 2**-n, (k+1) 2**-n]``; integrals over ``x`` use the
midpoint rule on such grids.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .calculus import _sums, _check_f
from .functions import SmoothFunction
from .ensemble import run_ensemble
from .partitions import (Partition, ResolutionError, _level_hits, cell_crossings,
                         lebesgue_dyadic, partition_values, resolution_ok)
from .paths import SampledPath, generate_fbm

POINTS_PER_CELL = 8


@dataclass(frozen=True)
class LocalTimeGrid:
    """Values of a spatial density on a grid ``x``.

    ``flavor`` is one of ``raw``, ``upcrossing_avg``, ``upcrossing_form``,
    ``occupation`` or ``averaged``.  ``dx`` is set for cell-centred grids
    (midpoint quadrature), ``None`` for user grids (trapezoid).
    """

    level: int | None
    time: float
    x: np.ndarray
    values: np.ndarray
    p: int
    flavor: str
    dx: float | None = None
    extras: dict = field(default_factory=dict)

    def integral(self) -> float:
        return weak_pairing(self, lambda x: np.ones_like(x))

    def to_csv(self, fname) -> None:
        with open(fname, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "L"])
            for a, b in zip(self.x, self.values):
                w.writerow([repr(float(a)), repr(float(b))])

    def replace(self, values, flavor: str) -> "LocalTimeGrid":
        return LocalTimeGrid(self.level, self.time, self.x, np.asarray(values, float), self.p,
                             flavor, self.dx, {})


def spatial_grid(path: SampledPath, n: int, t: float | None = None) -> np.ndarray:
    """Cell-centred grid over the cells met by ``S`` on ``[0, t]``, one spare cell each side."""
    x = _stopped_values(path, t)
    delta = 2.0 ** -n
    k_lo = int(math.ceil(x.min() / delta)) - 2
    k_hi = int(math.ceil(x.max() / delta))
    h = delta / POINTS_PER_CELL
    i = np.arange(k_lo * POINTS_PER_CELL, (k_hi + 1) * POINTS_PER_CELL)
    return (i + 0.5) * h


def _stopped_values(path: SampledPath, t) -> np.ndarray:
    if t is None or t >= path.horizon:
        return path.x
    m = int(np.searchsorted(path.times, t, side="right"))
    return np.concatenate([path.x[:m], path(np.array([t]))[:, 0]])


def _grid_dx(x: np.ndarray, n: int | None) -> float | None:
    if n is None or x.size < 2:
        return None
    h = 2.0 ** -n / POINTS_PER_CELL
    pos = x / h - 0.5
    if np.allclose(np.diff(x), h, rtol=1e-9, atol=0) and np.allclose(pos, np.round(pos), atol=1e-6):
        return h
    return None


def legs(path: SampledPath, part: Partition, t: float | None = None):
    """Endpoints ``a_j = S(t_j ^ t)``, ``b_j = S(t_{j+1} ^ t)`` of all partition intervals."""
    pv = partition_values(path, part)[:, 0]
    if t is None or t >= part.horizon:
        return pv[:-1], pv[1:]
    J = int(np.searchsorted(part.times[1:], t, side="right"))
    a = pv[:-1].copy()
    b = pv[1:].copy()
    st = path(np.array([t]))[0, 0]
    if J < len(a):
        b[J] = st
        a[J + 1:] = st
        b[J + 1:] = st
    return a, b


def _leg_sum(a, b, x, p: int, chunk: int = 20_000_000) -> np.ndarray:
    """``sum_j sign(b-a)**p 1{x in <<a,b]]} |b - x|**(p-1)`` on a sorted grid ``x``."""
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    i0 = np.searchsorted(x, lo, side="right")
    i1 = np.searchsorted(x, hi, side="right")
    keep = i1 > i0
    a, b, i0, i1 = a[keep], b[keep], i0[keep], i1[keep]
    sgn = np.sign(b - a) ** p
    out = np.zeros(len(x))
    count = i1 - i0
    start = 0
    while start < len(count):
        # chunk the legs so the expanded index array stays bounded
        c = np.cumsum(count[start:])
        stop = start + max(1, int(np.searchsorted(c, chunk, side="right")))
        cnt = count[start:stop]
        leg = np.repeat(np.arange(start, stop), cnt)
        off = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        idx = i0[leg] + off
        out += np.bincount(idx, weights=sgn[leg] * np.abs(b[leg] - x[idx]) ** (p - 1),
                           minlength=len(x))
        start = stop
    return out


def local_time_raw(path: SampledPath, part: Partition, p: int = 2, t: float | None = None,
                   x_grid=None) -> LocalTimeGrid:
    """Pre-limit local time ``L^{pi, p-1}_t`` on a spatial grid.

    Parameters
    ----------
    path : SampledPath
        Scalar path.
    part : Partition
        Any partition of ``[0, T]``.
    p : int
        Even order (odd ``p`` keeps the sign factor).
    t : float, optional
        Defaults to ``T``.
    x_grid : array_like, optional
        Sorted grid; defaults to :func:`spatial_grid` at the partition level
        (level 8 when the partition has none).
    """
    if path.dim != 1:
        raise ValueError("local times are defined for scalar paths")
    t = part.horizon if t is None else float(t)
    n = part.level if part.level is not None else 8
    x = spatial_grid(path, n, t) if x_grid is None else np.asarray(x_grid, dtype=float)
    if np.any(np.diff(x) <= 0):
        raise ValueError("x_grid must be strictly increasing")
    a, b = legs(path, part, t)
    lo, hi = min(a.min(), b.min()), max(a.max(), b.max())
    if hi > lo and (x[0] > lo or x[-1] <= hi - (hi - lo) * 1e-12):
        warnings.warn("spatial grid does not cover the path range; support is truncated",
                      RuntimeWarning, stacklevel=2)
    vals = _leg_sum(a, b, x, p)
    return LocalTimeGrid(part.level, t, x, vals, p, "raw", _grid_dx(x, n))


def _cell_of(x: np.ndarray, n: int) -> np.ndarray:
    return (np.ceil(x * 2.0 ** n) - 1).astype(np.int64)


def local_time_upcrossing(path: SampledPath, n: int, p: int = 2, t: float | None = None,
                          x_grid=None, check_resolution: bool = True) -> LocalTimeGrid:
    """Upcrossing average ``sum_k 2**(-n(p-1)) U_t(I_k) 1_{I_k}(x)`` along the Lebesgue partition.

    ``extras`` holds the crossing form
    ``(|(k+1)d - x|**(p-1) + |x - kd|**(p-1)) U_t(I_k)``, the raw local time
    and the largest crossing count ``max_k N_t(I_k)``.
    """
    part = lebesgue_dyadic(path, n, check_resolution)
    t = path.horizon if t is None else float(t)
    x = spatial_grid(path, n, t) if x_grid is None else np.asarray(x_grid, dtype=float)
    k_min, up, down = cell_crossings(part, t)
    d = 2.0 ** -n
    cell = _cell_of(x, n) - k_min
    inside = (cell >= 0) & (cell < len(up))
    U = np.where(inside, up[np.clip(cell, 0, max(len(up) - 1, 0))] if len(up) else 0, 0)
    k = cell + k_min
    avg = d ** (p - 1) * U
    form = (np.abs((k + 1) * d - x) ** (p - 1) + np.abs(x - k * d) ** (p - 1)) * U
    raw = local_time_raw(path, part, p, t, x).values
    nmax = int(np.max(up + down)) if len(up) else 0
    extras = {"crossing_form": form, "raw": raw, "max_crossings": nmax,
              "consistency_bound": 2 * d ** (p - 1) * (1 + nmax)}
    return LocalTimeGrid(n, t, x, avg, p, "upcrossing_avg", _grid_dx(x, n), extras)


def averaging_operator(values, x_grid, n: int) -> np.ndarray:
    """Cell averages ``(A_n f)(x) = 2**n int_{I_k} f`` on a grid.

    Each cell average is the mean of the grid values in that cell, which is
    the midpoint rule on cell-centred grids.

    Raises
    ------
    ValueError
        If some cell holding grid points has fewer than four of them.
    """
    x = np.asarray(x_grid, dtype=float)
    f = np.asarray(values, dtype=float)
    cell = _cell_of(x, n)
    c0 = cell.min()
    cnt = np.bincount(cell - c0)
    used = cnt[cnt > 0]
    if np.any(used < 4):
        raise ValueError("grid under-resolves the dyadic cells (need >= 4 points per cell)")
    s = np.bincount(cell - c0, weights=f)
    mean = s[cell - c0] / cnt[cell - c0]
    return mean


def weak_pairing(L: LocalTimeGrid, g) -> float:
    """``int L(x) g(x) dx`` by the midpoint rule (cell-centred grids) or trapezoid rule."""
    gv = np.asarray(g(L.x), dtype=float)
    if L.dx is not None:
        return float(np.sum(L.values * gv) * L.dx)
    return float(np.trapezoid(L.values * gv, L.x))


def _gauss_integral(lo, hi, fn, order: int) -> np.ndarray:
    """``int_lo^hi fn(x) dx`` per row, exact for polynomials of degree ``< 2 * order``."""
    nodes, w = np.polynomial.legendre.leggauss(order)
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    xs = mid[:, None] + half[:, None] * nodes[None, :]
    return half * np.sum(w[None, :] * fn(xs), axis=1)


def stieltjes_local_time(path: SampledPath, part: Partition, p: int, measure, t=None) -> float:
    """``int L^{pi, p-1}_t d mu`` for ``mu`` a :class:`StieltjesMeasure`, computed exactly."""
    a, b = legs(path, part, t)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    sgn = np.sign(b - a) ** p
    total = 0.0
    for loc, mass in measure.atoms:
        inside = (lo < loc) & (loc <= hi)
        total += mass * float(np.sum(sgn[inside] * np.abs(b[inside] - loc) ** (p - 1)))
    for dens in measure.densities:
        l = np.maximum(lo, dens.lower)
        ok = hi > l
        if not np.any(ok):
            continue
        bb, s = b[ok], sgn[ok]
        coeffs = np.asarray(dens.coeffs, dtype=float)
        deg = p - 1 + max(len(coeffs) - 1, 0)

        def fn(xs, bb=bb):
            # on (lo, hi] the sign of b - x is fixed, so |b - x|**(p-1) is a polynomial
            return np.abs(bb[:, None] - xs) ** (p - 1) * np.polynomial.polynomial.polyval(
                xs - dens.center, coeffs)

        total += float(np.sum(s * _gauss_integral(l[ok], hi[ok], fn, deg // 2 + 1)))
    return total


def tanaka_residual(f: SmoothFunction, path: SampledPath, part: Partition, p: int = 2,
                    t: float | None = None) -> float:
    """``f(S_t) - f(S_0) - CRS(t) - int L_t d f^{(p-1)} / (p-1)!`` along one partition.

    ``f`` must expose ``d f^{(p-1)}`` as point masses plus polynomial
    densities (ramp and polynomial families and their sums); the identity
    then holds up to rounding at every level.
    """
    if path.dim != 1:
        raise ValueError("the Tanaka identity is implemented for scalar paths")
    _check_f(f, path, p)
    t = part.horizon if t is None else float(t)
    meas = f.stieltjes_measure(p - 1)
    lhs = float(f(path(np.array([t])))[0] - f(path.values[:1])[0])
    crs = float(_sums(f, path, part, np.array([t]), range(1, p))[0])
    lt = stieltjes_local_time(path, part, p, meas, t)
    return lhs - crs - lt / math.factorial(p - 1)


def occupation_density(path: SampledPath, t: float | None = None, n: int = 8,
                       x_grid=None) -> LocalTimeGrid:
    """Cellwise ``2**n * |{s <= t : S(s) in I_k}|`` with exact sojourns of the interpolant."""
    if path.dim != 1:
        raise ValueError("occupation density needs a scalar path")
    t = path.horizon if t is None else float(t)
    x = spatial_grid(path, n, t) if x_grid is None else np.asarray(x_grid, dtype=float)
    k_min, dens = occupation_cells(path, n, t)
    cell = _cell_of(x, n) - k_min
    inside = (cell >= 0) & (cell < len(dens))
    vals = np.where(inside, dens[np.clip(cell, 0, len(dens) - 1)], 0.0)
    degenerate = bool(np.count_nonzero(dens) <= 1)
    return LocalTimeGrid(n, t, x, vals, 2, "occupation", _grid_dx(x, n),
                         {"degenerate": degenerate, "cell_min": k_min})


def occupation_cells(path: SampledPath, n: int, t: float | None = None):
    """``(k_min, density)`` with ``density[i]`` the occupation density on cell ``k_min + i``."""
    t = path.horizon if t is None else float(t)
    d = 2.0 ** -n
    xs = path.x
    end = t / path.dt
    pos_hits, _ = _level_hits(xs, d)
    grid_pos = np.arange(path.num_samples, dtype=float)
    pos = np.unique(np.concatenate([grid_pos[grid_pos < end], pos_hits[pos_hits < end], [end]]))
    # value at the midpoint of each piece decides its cell
    mid = 0.5 * (pos[1:] + pos[:-1])
    i = np.minimum(np.floor(mid).astype(np.int64), path.num_steps - 1)
    v = xs[i] + (mid - i) * (xs[i + 1] - xs[i])
    cell = _cell_of(v, n)
    k_min = int(cell.min())
    occ = np.bincount(cell - k_min, weights=np.diff(pos) * path.dt)
    return k_min, occ / d


def probe_panel(path: SampledPath, t: float | None = None) -> dict:
    """Five test functions placed on the bulk of the path's occupation measure."""
    xs = _stopped_values(path, t)
    c, s = float(np.mean(xs)), float(np.std(xs))
    s = s if s > 0 else 1.0

    def bump(m, w):
        return lambda x: np.exp(-0.5 * ((x - m) / w) ** 2)

    return {
        "bump_center": bump(c, s / 2),
        "bump_left": bump(c - s / 2, s / 4),
        "bump_right": bump(c + s / 2, s / 4),
        "indicator": lambda x: ((x >= c - s) & (x <= c + s)).astype(float),
        "ramp": lambda x: np.clip((x - (c - 2 * s)) / (4 * s), 0.0, 1.0),
    }


def moment_abs_gaussian(p: int) -> float:
    """``E|Z|**p`` for a standard normal ``Z`` (even ``p``: ``(p-1)!!``)."""
    return 2 ** (p / 2) * math.gamma((p + 1) / 2) / math.sqrt(math.pi)


@dataclass(frozen=True)
class ConjectureReport:
    """Trends of the upcrossing/occupation comparison across levels (no pass/fail).

    ``sup_gap[n]`` holds ``sup_x |2 tilde L_T(x) / E|Z|**p - occupation(x)|``
    per path; ``mu_ratio[n]`` holds ``mu^n([0, T]) / (E|Z|**p T)`` per path.
    """

    hurst: float
    p: int
    levels: tuple
    sup_gap: dict
    mu_ratio: dict
    unresolved: dict
    degenerate: bool

    def median_gap(self) -> dict:
        return {n: float(np.median(self.sup_gap[n])) for n in self.levels}

    def median_mu_ratio(self) -> dict:
        return {n: float(np.median(self.mu_ratio[n])) for n in self.levels}

    @property
    def gap_decreasing(self) -> bool:
        g = [self.median_gap()[n] for n in self.levels]
        return bool(np.all(np.diff(g) < 0))

    def to_json(self) -> dict:
        return {"hurst": self.hurst, "p": self.p, "levels": list(self.levels),
                "median_sup_gap": {str(n): v for n, v in self.median_gap().items()},
                "median_mu_ratio": {str(n): v for n, v in self.median_mu_ratio().items()},
                "unresolved_paths": {str(n): v for n, v in self.unresolved.items()},
                "gap_decreasing": self.gap_decreasing, "degenerate": self.degenerate}


def conjecture_statistics(path: SampledPath, n: int, p: int, check_resolution: bool = True):
    """``(sup_gap, mu_ratio, resolved, crossings)`` for one path at level ``n``."""
    resolved = resolution_ok(path, n)
    if check_resolution and not resolved:
        raise ResolutionError(f"level {n} is not resolvable on this path")
    part = lebesgue_dyadic(path, n, check_resolution=False)
    k_u, up, down = cell_crossings(part)
    k_o, occ = occupation_cells(path, n)
    m = moment_abs_gaussian(p)
    d = 2.0 ** -n
    lo = min(k_u, k_o) if len(up) else k_o
    hi = max(k_u + len(up), k_o + len(occ))
    a = np.zeros(hi - lo)
    b = np.zeros(hi - lo)
    a[k_u - lo:k_u - lo + len(up)] = 2 * d ** (p - 1) * up / m
    b[k_o - lo:k_o - lo + len(occ)] = occ
    gap = float(np.max(np.abs(a - b)))
    hits = int(np.count_nonzero(part.on_grid[1:]))
    mu = d ** p * hits
    return gap, mu / (m * path.horizon), resolved, int(np.sum(up + down))


def conjecture_experiment(hurst: float, levels=range(6, 11), num_paths: int = 64, seed: int = 0,
                          horizon: float = 1.0, num_steps: int = 2 ** 16, paths=None,
                          threads: int | None = None, check_resolution: bool = False
                          ) -> ConjectureReport:
    """Compare ``2 tilde L / E|Z|**p`` with the occupation density along Lebesgue partitions.

    ``p = 1/H`` must be an even integer.  Levels the sampling grid cannot
    resolve are computed on the interpolated path and counted in
    ``unresolved`` (or rejected when ``check_resolution``).  ``paths``
    replaces the generated fBm ensemble.
    """
    p_float = 1.0 / hurst
    p = int(round(p_float))
    if abs(p_float - p) > 1e-12 or p % 2:
        raise ValueError("the experiment needs 1/H to be an even integer")
    lv = tuple(sorted(int(n) for n in levels))

    def job(i):
        S = paths[i] if paths is not None else generate_fbm(hurst, horizon, num_steps, seed,
                                                            path_index=i)
        return [conjecture_statistics(S, n, p, check_resolution) for n in lv]

    count = len(paths) if paths is not None else num_paths
    res = run_ensemble(job, count, threads)
    gap = {n: np.array([r[i][0] for r in res]) for i, n in enumerate(lv)}
    mu = {n: np.array([r[i][1] for r in res]) for i, n in enumerate(lv)}
    unres = {n: int(sum(not r[i][2] for r in res)) for i, n in enumerate(lv)}
    degenerate = any(r[i][3] == 0 for r in res for i in range(len(lv)))
    return ConjectureReport(hurst, p, lv, gap, mu, unres, degenerate)
