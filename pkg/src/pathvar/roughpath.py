"""
Reduced rough paths built from a path and its p-th variation.

The canonical lift of ``S`` with even ``p`` has levels

    X^k_{s,t} = (S(t) - S(s))^{(x) k} / k!,                     k < p,
    X^p_{s,t} = ((S(t) - S(s))^{(x) p} - (V(t) - V(s))) / p!,

where ``V`` is a cumulative tensor p-th variation, interpolated linearly
between its knots.  Controlled paths ``Y^k = nabla^k f(S)`` are integrated
against the lift by compensated sums over dyadic refinements of the sample
grid (sewing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calculus import _sums
from .functions import SmoothFunction
from .partitions import as_sequence, partition_values
from .paths import SampledPath
from .tensors import (contract_coeffs, multiplicities, num_coeffs, pairing_coeffs,
                      sym_outer_coeffs, sym_power_coeffs)
from .variation import VariationProfile, cumulative


def _norm(c: np.ndarray, dim: int, order: int) -> np.ndarray:
    return np.sqrt(np.sum(multiplicities(dim, order) * np.asarray(c) ** 2, axis=-1))


def lift_variation(path: SampledPath, p: int, level: int, scheme: str = "uniform") -> np.ndarray:
    """Cumulative level-``n`` tensor variation on the sample grid.

    Knots sit at the partition points, where the value is the sum over
    completed intervals; in between the variation is interpolated linearly,
    which keeps it additive and non-decreasing.
    """
    seq = as_sequence(path, scheme)
    part = seq(level)
    terms = sym_power_coeffs(np.diff(partition_values(path, part), axis=0), p)
    knots = cumulative(terms, part.times, part.times, "right")
    return np.stack([np.interp(path.times, part.times, knots[:, i])
                     for i in range(knots.shape[1])], axis=1)


@dataclass(frozen=True)
class ReducedRoughPath:
    """Canonical reduced rough path of a sampled path.

    ``variation`` holds the cumulative top-level variation on the sample grid,
    shape ``(num_samples, ncoeff(dim, p))``.
    """

    path: SampledPath
    p: int
    variation: np.ndarray
    q: float | None = None

    def __post_init__(self):
        v = np.asarray(self.variation, dtype=float)
        nc = num_coeffs(self.path.dim, self.p)
        if v.shape != (self.path.num_samples, nc):
            raise ValueError(f"variation must have shape ({self.path.num_samples}, {nc})")
        object.__setattr__(self, "variation", v)

    @property
    def dim(self) -> int:
        return self.path.dim

    def _V(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.stack([np.interp(t, self.path.times, self.variation[:, i])
                         for i in range(self.variation.shape[1])], axis=-1)

    def levels(self, s, t) -> list:
        """``[X^0, ..., X^p]`` at pairs ``(s, t)``, each of shape ``(m, ncoeff_k)``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        dS = self.path(t) - self.path(s)
        out = [np.ones((len(s), 1))]
        for k in range(1, self.p + 1):
            out.append(sym_power_coeffs(dS, k) / math.factorial(k))
        out[self.p] = out[self.p] - (self._V(t) - self._V(s)) / math.factorial(self.p)
        return out

    def with_top_shift(self, c: float) -> "ReducedRoughPath":
        """Copy whose top level is shifted by ``c`` on every pair ``s < t`` (negative control)."""
        return _ShiftedLift(self.path, self.p, self.variation, self.q, float(c))


@dataclass(frozen=True)
class _ShiftedLift(ReducedRoughPath):
    shift: float = 0.0

    def levels(self, s, t) -> list:
        out = super().levels(s, t)
        s, t = np.atleast_1d(s), np.atleast_1d(t)
        out[self.p] = out[self.p] + self.shift * (t > s)[:, None]
        return out


def canonical_lift(path: SampledPath, p: int = 2, variation="grid", q: float | None = None,
                   scheme: str = "uniform") -> ReducedRoughPath:
    """Reduced rough path of ``path`` from a p-th variation estimate.

    Parameters
    ----------
    variation : {"zero", "grid"}, int, VariationProfile or ndarray
        ``"zero"`` for paths with vanishing variation; ``"grid"`` sums over
        the sample grid itself; an integer level uses
        :func:`lift_variation` with ``scheme``; a tensor (or scalar, for
        ``dim == 1``) profile is interpolated from its finest level; an array
        gives the cumulative variation on the sample grid directly.
    q : float, optional
        Variation exponent of the lift (``q > p``, same integer part); metadata.
    """
    if p < 1 or p % 2:
        raise ValueError("the canonical lift is built for even p")
    nc = num_coeffs(path.dim, p)
    if isinstance(variation, str):
        if variation == "zero":
            V = np.zeros((path.num_samples, nc))
        elif variation == "grid":
            terms = sym_power_coeffs(np.diff(path.values, axis=0), p)
            V = np.concatenate([np.zeros((1, nc)), np.cumsum(terms, axis=0)])
        else:
            raise ValueError(f"unknown variation source {variation!r}")
    elif isinstance(variation, (int, np.integer)):
        V = lift_variation(path, p, int(variation), scheme)
    elif isinstance(variation, VariationProfile):
        vals = np.asarray(variation[variation.finest], float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape[1] != nc or int(variation.p) != p:
            raise ValueError("variation profile does not match the path dimension or p")
        tk = np.concatenate([[0.0], variation.eval_times])
        vk = np.concatenate([np.zeros((1, nc)), vals])
        tk, idx = np.unique(tk, return_index=True)
        vk = vk[idx]
        if tk[-1] < path.horizon:
            raise ValueError("variation profile must be evaluated up to T")
        V = np.stack([np.interp(path.times, tk, vk[:, i]) for i in range(nc)], axis=1)
    else:
        V = np.asarray(variation, dtype=float).reshape(path.num_samples, nc)
    return ReducedRoughPath(path, p, V, q)


@dataclass(frozen=True)
class ChenReport:
    defects: np.ndarray
    relative: np.ndarray
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.relative < self.tol))

    def to_json(self) -> dict:
        return {"chen_defects": self.defects.tolist(), "relative": self.relative.tolist(),
                "tol": self.tol, "passed": self.passed}


def random_triples(horizon: float, m: int, seed: int = 0, grid=None) -> np.ndarray:
    """``m`` sorted triples ``s <= u <= t`` (snapped to ``grid`` if given)."""
    rng = np.random.default_rng(seed)
    tr = np.sort(rng.uniform(0, horizon, (m, 3)), axis=1)
    if grid is not None:
        grid = np.asarray(grid)
        tr = grid[np.clip(np.searchsorted(grid, tr), 0, len(grid) - 1)]
    return tr


def check_reduced_chen(X: ReducedRoughPath, triples, tol: float = 1e-12) -> ChenReport:
    """Levelwise ``|X^k_{s,t} - sum_l Sym(X^l_{s,u} (x) X^{k-l}_{u,t})|`` over triples.

    ``defects[k]`` is the maximum absolute defect (Frobenius norm); the check
    passes when every defect is below ``tol * (1 + |X^k_{s,t}|)``.
    """
    tr = np.atleast_2d(np.asarray(triples, dtype=float))
    s, u, t = tr[:, 0], tr[:, 1], tr[:, 2]
    A, B, C = X.levels(s, u), X.levels(u, t), X.levels(s, t)
    d = X.dim
    defects, rel = [], []
    for k in range(X.p + 1):
        rhs = sum(sym_outer_coeffs(A[l], B[k - l], d, l, k - l) for l in range(k + 1))
        err = _norm(C[k] - rhs, d, k)
        defects.append(float(err.max()))
        rel.append(float(np.max(err / (1 + _norm(C[k], d, k)))))
    return ChenReport(np.array(defects), np.array(rel), tol)


@dataclass(frozen=True)
class ControlFunction:
    """Control ``c(s, t)``; ``kind`` is ``linear``, ``qvar`` or ``sum``.

    ``qvar`` controls are tabulated on a time grid and evaluated at the
    nearest grid points.
    """

    kind: str
    times: np.ndarray | None = None
    table: np.ndarray | None = None
    scale: float = 1.0
    parts: tuple = ()

    def __call__(self, s, t) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        if self.kind == "linear":
            return self.scale * (t - s)
        if self.kind == "sum":
            return sum(c(s, t) for c in self.parts)
        i = self._index(s)
        j = self._index(t)
        return self.scale * self.table[i, j]

    def _index(self, t):
        k = np.searchsorted(self.times, t)
        k = np.clip(k, 1, len(self.times) - 1)
        left = self.times[k - 1]
        return np.where(np.abs(t - left) <= np.abs(self.times[k] - t), k - 1, k)

    def __add__(self, other: "ControlFunction") -> "ControlFunction":
        return ControlFunction("sum", parts=(self, other))

    def superadditivity_defect(self, triples) -> float:
        """Largest ``c(s,u) + c(u,t) - c(s,t)`` over the triples (``<= 0`` for a control)."""
        tr = np.atleast_2d(np.asarray(triples, dtype=float))
        s, u, t = tr.T
        return float(np.max(self(s, u) + self(u, t) - self(s, t)))


def linear_control(scale: float = 1.0) -> ControlFunction:
    """``c(s, t) = scale * (t - s)``."""
    return ControlFunction("linear", scale=float(scale))


def discrete_qvar_table(x: np.ndarray, q: float) -> np.ndarray:
    """``C[s, t] = max over sub-partitions of x[s..t] of sum |x_{j+1} - x_j|**q``.

    Dynamic programme over the sample points, vectorised over the start index:
    ``C[:, t] = max_{u < t} C[:, u] + |x_t - x_u|**q`` restricted to ``u >= s``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    m = len(x)
    C = np.full((m, m), -np.inf)
    np.fill_diagonal(C, 0.0)
    for t in range(1, m):
        inc = np.linalg.norm(x[t] - x[:t], axis=1) ** q
        C[:t, t] = np.max(C[:t, :t] + inc[None, :], axis=1)
    C[~np.isfinite(C)] = 0.0
    return C


def qvar_control(path: SampledPath, q: float, max_points: int = 1025) -> ControlFunction:
    """Discrete q-variation control ``c(s,t) = ||S||_{q-var,[s,t]}**q`` over the sample points.

    Cost is cubic in the number of samples, so paths with more than
    ``max_points`` samples are rejected.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    if path.num_samples > max_points:
        raise ValueError(f"q-variation control is tabulated for at most {max_points} samples")
    return ControlFunction("qvar", path.times, discrete_qvar_table(path.values, q))


@dataclass(frozen=True)
class ControlledPath:
    """Components ``Y^0..Y^p`` on the sample grid, ``Y^k`` of shape ``(num_samples, ncoeff_k)``."""

    path: SampledPath
    components: tuple
    p: int

    def at(self, k: int, idx) -> np.ndarray:
        return self.components[k][idx]

    def remainders(self, X: ReducedRoughPath, i, j) -> list:
        """``R^l = Y^l(t) - sum_{k=l}^{p} <Y^k(s), X^{k-l}_{s,t}>`` for grid index pairs ``(i, j)``.

        Returns the Frobenius norms per ``l = 1..p``.
        """
        i, j = np.atleast_1d(i), np.atleast_1d(j)
        t = self.path.times
        Xl = X.levels(t[i], t[j])
        d = self.path.dim
        out = []
        for l in range(1, self.p + 1):
            r = self.components[l][j].copy()
            for k in range(l, self.p + 1):
                r = r - contract_coeffs(self.components[k][i], Xl[k - l], d, k, k - l)
            out.append(_norm(r, d, l))
        return out

    def remainder_constants(self, X: ReducedRoughPath, control: ControlFunction, i, j,
                            q: float) -> np.ndarray:
        """``max |R^l| / c(s,t)**((p - l + 1)/q)`` over the pairs, per ``l``."""
        t = self.path.times
        c = control(t[i], t[j])
        ok = c > 0
        R = self.remainders(X, i, j)
        return np.array([float(np.max(r[ok] / c[ok] ** ((self.p - l + 1) / q), initial=0.0))
                         for l, r in zip(range(1, self.p + 1), R)])


def controlled_from_function(f: SmoothFunction, path: SampledPath, p: int) -> ControlledPath:
    """``Y^0 = 1`` and ``Y^k = nabla^k f(S)`` for ``k = 1..p``."""
    if not f.has_order(p):
        raise ValueError(f"{f.name} lacks derivatives of order {p}")
    if f.dim != path.dim:
        raise ValueError("function and path dimensions differ")
    x = path.values if path.dim > 1 else path.x
    comps = [np.ones((path.num_samples, 1))]
    for k in range(1, p + 1):
        d = f.derivative(k, x)
        comps.append(d.reshape(path.num_samples, -1))
    return ControlledPath(path, tuple(comps), p)


@dataclass(frozen=True)
class SewingResult:
    """Compensated sums per dyadic refinement of the sample grid."""

    t: float
    values: dict
    cauchy: np.ndarray
    rate_exponent: float

    @property
    def value(self) -> float:
        return self.values[max(self.values)]

    def to_json(self) -> dict:
        return {"t": self.t, "levels": {str(k): v for k, v in self.values.items()},
                "sewing_cauchy": self.cauchy.tolist(), "rate_exponent": self.rate_exponent}


def _dyadic_sum(Y: ControlledPath, X: ReducedRoughPath, m: int, t: float) -> float:
    path = Y.path
    stride = path.num_steps // 2 ** m
    idx = np.arange(0, path.num_steps + 1, stride)
    tj = path.times[idx]
    keep = tj[:-1] < t
    left = idx[:-1][keep]
    right_t = np.minimum(path.times[idx[1:][keep]], t)
    Xl = X.levels(path.times[left], right_t)
    total = 0.0
    for k in range(1, Y.p + 1):
        total += float(np.sum(pairing_coeffs(Y.components[k][left], Xl[k], path.dim, k)))
    return total


def rough_integral(Y: ControlledPath, X: ReducedRoughPath, t: float | None = None,
                   max_level: int | None = None, min_level: int = 0) -> SewingResult:
    """Sewing integral ``int_0^t <Y, dX>`` over dyadic refinements of the sample grid.

    Level ``m`` uses ``2**m`` equal intervals of ``[0, T]``, stopped at
    ``t``.  ``max_level`` defaults to the sample grid itself (requires
    ``num_steps`` to be a power of two).  The theoretical local error has
    exponent ``(p + 1) / p`` in the control.
    """
    if Y.p != X.p or Y.path.num_samples != X.path.num_samples:
        raise ValueError("controlled path and rough path are incompatible")
    N = Y.path.num_steps
    top = int(round(math.log2(N)))
    if 2 ** top != N:
        raise ValueError("sewing over dyadic refinements needs a power-of-two number of steps")
    max_level = top if max_level is None else int(max_level)
    if not 0 <= min_level <= max_level <= top:
        raise ValueError(f"refinement levels must lie in [0, {top}]")
    t = Y.path.horizon if t is None else float(t)
    vals = {m: _dyadic_sum(Y, X, m, t) for m in range(min_level, max_level + 1)}
    lv = sorted(vals)
    cauchy = np.array([abs(vals[b] - vals[a]) for a, b in zip(lv[:-1], lv[1:])])
    return SewingResult(t, vals, cauchy, (X.p + 1) / X.p)


@dataclass(frozen=True)
class EquivalenceReport:
    """Gap between the sewing integral and the compensated Riemann sum, per matched level."""

    levels: tuple
    rough: dict
    compensated: dict
    gaps: dict

    def to_json(self) -> dict:
        return {"levels": list(self.levels),
                "gaps": {str(n): g for n, g in self.gaps.items()},
                "rough": {str(n): v for n, v in self.rough.items()},
                "compensated": {str(n): v for n, v in self.compensated.items()}}


def integral_equivalence_check(f: SmoothFunction, path: SampledPath, p: int, levels,
                               t: float | None = None, scheme: str = "uniform") -> EquivalenceReport:
    """Compare ``int <nabla f(S), dX>`` with the compensated-sum integral at matched levels.

    At level ``n`` the lift takes its top-level variation from ``pi_n``
    (knots at the partition points), the sewing sum is taken on the sample
    grid, and the compensated Riemann sum is taken along ``pi_n``.
    """
    t = path.horizon if t is None else float(t)
    Y = controlled_from_function(f, path, p)
    seq = as_sequence(path, scheme)
    rough, comp, gaps = {}, {}, {}
    for n in sorted(int(n) for n in levels):
        X = canonical_lift(path, p, n, scheme=scheme)
        rough[n] = rough_integral(Y, X, t, min_level=int(round(math.log2(path.num_steps)))).value
        comp[n] = float(_sums(f, path, seq(n), np.array([t]), range(1, p))[0])
        gaps[n] = abs(rough[n] - comp[n])
    return EquivalenceReport(tuple(sorted(gaps)), rough, comp, gaps)
