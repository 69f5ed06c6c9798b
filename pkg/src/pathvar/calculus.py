"""
Compensated Riemann sums and change-of-variable residuals.

Along a partition ``pi_n`` the compensated sum of ``f`` is

    CRS_n(t) = sum_j sum_{k=1}^{p-1} <nabla^k f(S(t_j)), (S(t_{j+1} ^ t) - S(t_j ^ t))^{(x) k}> / k!

and the change-of-variable residual subtracts the order-``p`` term
``<nabla^p f(S(t_j)), (Delta S)^{(x) p}> / p!`` with the same truncated
increments, so the identity is exact for polynomials of degree ``p``.

The functional part works with cylindrical functionals

    F(t, w) = sum_i a_i(t) phi_i(w(t)) psi_i(int_0^t h(w(s)) ds)

whose horizontal and vertical derivatives are closed form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .functions import SmoothFunction, polynomial
from .partitions import Partition, as_sequence, partition_values
from .paths import SampledPath
from .tensors import monomials, multiplicities
from .variation import _eval_times, _levels, cumulative, pth_variation_scalar, term_counts


@dataclass(frozen=True)
class IntegralProfile:
    """Per-level compensated sums and change-of-variable residuals.

    ``values[n]`` and ``residuals[n]`` are arrays over ``eval_times``;
    ``lhs`` is the level-independent left-hand side (for instance
    ``f(S(t)) - f(S(0))``).
    """

    eval_times: np.ndarray
    values: dict
    lhs: np.ndarray | None = None
    residuals: dict = field(default_factory=dict)
    p: int = 2
    scheme: str = "uniform"
    label: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def levels(self) -> tuple:
        return tuple(sorted(self.values))

    @property
    def limit(self) -> np.ndarray:
        """Finest-level sums, taken as the limit estimate."""
        return self.values[self.levels[-1]]

    def residual_at_end(self) -> dict:
        return {n: float(r[-1]) for n, r in self.residuals.items()}

    def to_json(self) -> dict:
        out = {"label": self.label, "p": self.p, "scheme": self.scheme,
               "eval_times": self.eval_times.tolist(), "levels": []}
        if self.lhs is not None:
            out["lhs"] = np.asarray(self.lhs).tolist()
        for n in self.levels:
            rec = {"n": n, "values": np.asarray(self.values[n]).tolist()}
            if n in self.residuals:
                rec["residuals"] = np.asarray(self.residuals[n]).tolist()
            rec.update(self.extras.get(n, {}))
            out["levels"].append(rec)
        return out


def truncated_increments(pv: np.ndarray, times: np.ndarray, path: SampledPath, t) -> tuple:
    """Index bookkeeping for ``S(t_{j+1} ^ t) - S(t_j ^ t)``.

    Returns ``(J, partial)``: the first ``J`` intervals end by ``t`` and are
    taken whole; interval ``J`` (if any) contributes ``S(t) - S(t_J)``.
    """
    t = np.atleast_1d(t)
    J = term_counts(times, t, "right")
    J = np.minimum(J, len(times) - 1)
    partial = path(t) - pv[J]
    partial[J == len(times) - 1] = 0.0
    return J, partial


def _taylor_terms(f: SmoothFunction, x: np.ndarray, dx: np.ndarray, orders) -> np.ndarray:
    """``sum_k <nabla^k f(x), dx^k> / k!`` over ``orders``, per row."""
    out = np.zeros(len(x))
    for k in orders:
        if f.dim == 1:
            out += f.derivative(k, x[:, 0]) * dx[:, 0] ** k / math.factorial(k)
        else:
            d = f.derivative(k, x)
            out += np.sum(multiplicities(f.dim, k) * d * monomials(dx, k), axis=1) / math.factorial(k)
    return out


def _sums(f: SmoothFunction, path: SampledPath, part: Partition, t, orders) -> np.ndarray:
    """Truncated sums ``sum_j sum_{k in orders}`` at every ``t``."""
    pv = partition_values(path, part)
    terms = _taylor_terms(f, pv[:-1], np.diff(pv, axis=0), orders)
    J, partial = truncated_increments(pv, part.times, path, t)
    c = np.concatenate([[0.0], np.cumsum(terms)])
    last = np.minimum(J, len(terms) - 1)
    tail = _taylor_terms(f, pv[last], partial, orders)
    return c[J] + tail


def _check_f(f: SmoothFunction, path: SampledPath, p: int):
    if p < 2 or p % 2:
        raise ValueError("p must be an even integer >= 2")
    if f.dim != path.dim:
        raise ValueError(f"function on R^{f.dim} applied to a path in R^{path.dim}")
    if not f.has_order(p - 1):
        raise ValueError(f"{f.name} lacks derivatives of order {p - 1}")


def compensated_integral(f: SmoothFunction, path: SampledPath, seq="uniform", p: int = 2,
                         eval_times=None, levels=(8,)) -> IntegralProfile:
    """Compensated Riemann sums of ``f`` along ``S`` per level.

    The limit defines ``int_0^t f'(S) dS``; the profile records the raw
    sums at every level, with the finest level as limit estimate.
    """
    _check_f(f, path, p)
    seq = as_sequence(path, seq)
    t = _eval_times(path, eval_times)
    vals = {n: _sums(f, path, seq(n), t, range(1, p)) for n in _levels(levels)}
    return IntegralProfile(t, vals, p=p, scheme=seq.scheme, label=f.name)


def change_of_variable_residual(f: SmoothFunction, path: SampledPath, seq="uniform", p: int = 2,
                                eval_times=None, levels=(8,)) -> IntegralProfile:
    """Residual ``f(S(t)) - f(S(0)) - CRS_n(t) - Stieltjes_n / p!``.

    The Stieltjes term is ``sum_j <nabla^p f(S(t_j)), (Delta S_j)^{(x) p}>``
    with increments truncated at ``t``, i.e. the left-point Riemann-Stieltjes
    sum of ``nabla^p f(S)`` against the level-``n`` variation measure.
    """
    _check_f(f, path, p)
    if not f.has_order(p):
        raise ValueError(f"{f.name} lacks derivatives of order {p}")
    seq = as_sequence(path, seq)
    t = _eval_times(path, eval_times)
    lhs = f(path(t)) - f(path.values[:1])[0]
    vals, res, extras = {}, {}, {}
    for n in _levels(levels):
        part = seq(n)
        crs = _sums(f, path, part, t, range(1, p))
        stj = _sums(f, path, part, t, [p])
        vals[n] = crs
        res[n] = lhs - crs - stj
        extras[n] = {"stieltjes": stj.tolist()}
    return IntegralProfile(t, vals, lhs, res, p, seq.scheme, f.name, extras)


def telescoping_check(f: SmoothFunction, path: SampledPath, part: Partition, t=None) -> float:
    """``|sum_j (f(S(t_{j+1} ^ t)) - f(S(t_j ^ t))) - (f(S(t)) - f(S(0)))|``."""
    t = path.horizon if t is None else float(t)
    pts = np.unique(np.minimum(part.times, t))
    vals = f(path(pts))
    return float(abs(np.sum(np.diff(vals)) - (vals[-1] - vals[0])))


# ---------------------------------------------------------------------------
# cylindrical functionals


@dataclass(frozen=True)
class CylindricalTerm:
    """``a(t) * phi(y) * psi(z)`` with polynomial ``a``, ``psi`` (ascending coefficients)."""

    time_coeffs: tuple
    phi: SmoothFunction
    z_coeffs: tuple = (1.0,)


class CylindricalFunctional:
    """``F(t, w) = g(t, w(t), int_0^t h(w(s)) ds)`` with ``g`` a sum of product terms.

    Horizontal derivative ``DF = d_t g + h(w(t)) d_z g``; vertical
    derivatives ``nabla_w^k F = d_y^k g``.
    """

    def __init__(self, terms: Sequence[CylindricalTerm], h: SmoothFunction | None = None,
                 name: str = "F"):
        self.terms = tuple(terms)
        self.h = h if h is not None else polynomial([0.0])
        self.name = name
        for term in self.terms:
            if term.phi.dim != 1:
                raise ValueError("cylindrical functionals act on scalar paths")

    def __repr__(self):
        return f"CylindricalFunctional({self.name!r})"

    def _parts(self, t, y, z, ky=0, dt=0, dz=0):
        t, y, z = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (t, y, z)))
        out = np.zeros(t.shape)
        for term in self.terms:
            a = np.asarray(term.time_coeffs, float)
            b = np.asarray(term.z_coeffs, float)
            a = P.polyder(a, dt) if dt else a
            b = P.polyder(b, dz) if dz else b
            if not a.size or not b.size:
                continue
            out = out + P.polyval(t, a) * term.phi.derivative(ky, y) * P.polyval(z, b)
        return out

    def g(self, t, y, z):
        return self._parts(t, y, z)

    def vertical(self, k: int, t, y, z):
        """``d_y^k g``."""
        return self._parts(t, y, z, ky=k)

    def horizontal(self, t, y, z):
        """``d_t g + h(y) d_z g``."""
        return self._parts(t, y, z, dt=1) + self.h(np.asarray(y, float)) * self._parts(t, y, z, dz=1)

    def has_order(self, k: int) -> bool:
        return all(term.phi.has_order(k) for term in self.terms)

    def scaled(self, c: float) -> "CylindricalFunctional":
        return CylindricalFunctional([CylindricalTerm(tuple(c * a for a in term.time_coeffs),
                                                      term.phi, term.z_coeffs)
                                      for term in self.terms], self.h, f"{c}*{self.name}")

    # evaluation on concrete paths

    def running_integral(self, path: SampledPath, t) -> np.ndarray:
        """``int_0^t h(S(s)) ds`` by the trapezoid rule on the sample grid."""
        hv = self.h(path.x)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (hv[1:] + hv[:-1]) * path.dt)])
        return np.interp(np.asarray(t, float), path.times, cum)

    def on_path(self, path: SampledPath, t, values=None) -> np.ndarray:
        """``F(t, S_t)``; ``values`` overrides ``S(t)`` (exact partition values)."""
        t = np.asarray(t, dtype=float)
        y = path(t)[..., 0] if values is None else np.asarray(values, float).reshape(t.shape)
        return self.g(t, y, self.running_integral(path, t))

    def step_state(self, path: SampledPath, part: Partition):
        """``(t_j, S^n(t_j -), z^n_j)`` along the step approximation.

        ``S^n`` takes the value ``S(t_{j+1})`` on ``[t_j, t_{j+1})`` so its
        left limit at ``t_j`` is ``S(t_j)`` (``S(0)`` at ``t = 0``) and
        ``z^n_j = sum_{i<j} h(S(t_{i+1})) (t_{i+1} - t_i)``.
        """
        pv = partition_values(path, part)[:, 0]
        hz = self.h(pv[1:]) * np.diff(part.times)
        z = np.concatenate([[0.0], np.cumsum(hz)])
        return part.times, pv, z


def endpoint_functional(phi: SmoothFunction, time_coeffs=(1.0,)) -> CylindricalFunctional:
    """``F(t, w) = a(t) phi(w(t))``."""
    return CylindricalFunctional([CylindricalTerm(tuple(time_coeffs), phi)], None,
                                 f"a(t)*{phi.name}(w(t))")


def integral_functional(h: SmoothFunction) -> CylindricalFunctional:
    """``F(t, w) = int_0^t h(w(s)) ds``."""
    return CylindricalFunctional([CylindricalTerm((1.0,), polynomial([1.0]), (0.0, 1.0))], h,
                                 f"int {h.name}(w) ds")


def _functional_sums(F: CylindricalFunctional, path: SampledPath, part: Partition, t, orders):
    tj, y, z = F.step_state(path, part)
    pv = partition_values(path, part)
    J, partial = truncated_increments(pv, part.times, path, t)
    dS = np.diff(y)

    def terms(idx, dx):
        out = np.zeros(len(idx))
        for k in orders:
            out += F.vertical(k, tj[idx], y[idx], z[idx]) * dx ** k / math.factorial(k)
        return out

    full = terms(np.arange(len(dS)), dS)
    c = np.concatenate([[0.0], np.cumsum(full)])
    last = np.minimum(J, len(dS) - 1)
    return c[J] + terms(last, partial[:, 0])


def _check_functional(F: CylindricalFunctional, path: SampledPath, seq, p: int):
    if path.dim != 1:
        raise ValueError("functional calculus is implemented for scalar paths")
    if p < 2 or p % 2:
        raise ValueError("p must be an even integer >= 2")
    if not F.has_order(p):
        raise ValueError(f"{F.name} lacks vertical derivatives of order {p}")
    seq = as_sequence(path, seq)
    if seq.scheme == "lebesgue":
        warnings.warn("Lebesgue partitions need not have vanishing mesh; the functional "
                      "formula is only guaranteed for mesh -> 0", RuntimeWarning, stacklevel=3)
    return seq


def functional_compensated_integral(F: CylindricalFunctional, path: SampledPath, seq="uniform",
                                    p: int = 2, eval_times=None, levels=(8,)) -> IntegralProfile:
    """``sum_j sum_{k<p} nabla_w^k F(t_j, S^n_{t_j-}) (Delta S)^k / k!`` per level."""
    seq = _check_functional(F, path, seq, p)
    t = _eval_times(path, eval_times)
    vals = {n: _functional_sums(F, path, seq(n), t, range(1, p)) for n in _levels(levels)}
    return IntegralProfile(t, vals, p=p, scheme=seq.scheme, label=F.name)


def horizontal_integral(F: CylindricalFunctional, path: SampledPath, t) -> np.ndarray:
    """``int_0^t DF(s, S_s) ds`` by the trapezoid rule on the sample grid."""
    z = F.running_integral(path, path.times)
    d = F.horizontal(path.times, path.x, z)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * path.dt)])
    return np.interp(np.asarray(t, float), path.times, cum)


def functional_change_of_variable_residual(F: CylindricalFunctional, path: SampledPath,
                                           seq="uniform", p: int = 2, eval_times=None,
                                           levels=(8,)) -> IntegralProfile:
    """Residual ``F(t,S_t) - F(0,S_0) - int DF ds - CRS_n - Stieltjes_n / p!``."""
    seq = _check_functional(F, path, seq, p)
    t = _eval_times(path, eval_times)
    lhs = F.on_path(path, t) - F.on_path(path, np.zeros(1))[0]
    hor = horizontal_integral(F, path, t)
    vals, res, extras = {}, {}, {}
    for n in _levels(levels):
        part = seq(n)
        crs = _functional_sums(F, path, part, t, range(1, p))
        stj = _functional_sums(F, path, part, t, [p])
        vals[n] = crs
        res[n] = lhs - hor - crs - stj
        extras[n] = {"stieltjes": stj.tolist()}
    return IntegralProfile(t, vals, lhs, res, p, seq.scheme, F.name,
                           dict(extras, horizontal=hor.tolist()))


@dataclass(frozen=True)
class IsometryReport:
    """``lhs[n]``: p-th variation sums of ``F(., S)``; ``rhs[n]``: Stieltjes sums of ``|nabla F|^p``."""

    eval_times: np.ndarray
    lhs: dict
    rhs: dict
    gap: dict
    p: int
    holder_threshold: float

    def to_json(self) -> dict:
        return {"p": self.p, "eval_times": self.eval_times.tolist(),
                "holder_threshold": self.holder_threshold,
                "levels": [{"n": n, "lhs": self.lhs[n].tolist(), "rhs": self.rhs[n].tolist(),
                            "gap": self.gap[n]} for n in sorted(self.lhs)]}


def _functional_at_partition(F: CylindricalFunctional, path: SampledPath, part: Partition):
    pv = partition_values(path, part)[:, 0]
    z = F.running_integral(path, part.times)
    return pv, z, F.g(part.times, pv, z)


def isometry_check(F: CylindricalFunctional, path: SampledPath, seq="uniform", p: int = 2,
                   eval_times=None, levels=(8,)) -> IsometryReport:
    """Compare ``[F(., S)]^p`` with ``int |nabla_w F|^p d[S]^p`` level by level.

    Both sides count intervals with ``t_j <= t``.  The Hoelder-exponent
    hypothesis ``alpha > ((1 + 4/p)**0.5 - 1) / 2`` is recorded, not tested.
    """
    if path.dim != 1:
        raise ValueError("isometry check needs a scalar path")
    seq = as_sequence(path, seq)
    t = _eval_times(path, eval_times)
    lhs, rhs, gap = {}, {}, {}
    for n in _levels(levels):
        part = seq(n)
        y, z, X = _functional_at_partition(F, path, part)
        grad = F.vertical(1, part.times[:-1], y[:-1], z[:-1])
        lhs[n] = cumulative(np.abs(np.diff(X)) ** p, part.times, t)
        rhs[n] = cumulative(np.abs(grad) ** p * np.abs(np.diff(y)) ** p, part.times, t)
        gap[n] = float(np.max(np.abs(lhs[n] - rhs[n])))
    return IsometryReport(t, lhs, rhs, gap, p, (math.sqrt(1 + 4 / p) - 1) / 2)


@dataclass(frozen=True)
class Decomposition:
    """``F(t, S_t) - F(0, S_0) = M_n(t) + A_n(t)`` per level with ``[A_n]^p`` sums."""

    eval_times: np.ndarray
    M: dict
    A: dict
    A_variation: dict
    p: int
    precondition_ok: bool
    diagnostics: dict

    def to_json(self) -> dict:
        return {"p": self.p, "eval_times": self.eval_times.tolist(),
                "precondition_ok": self.precondition_ok, "diagnostics": self.diagnostics,
                "levels": [{"n": n, "M": self.M[n].tolist(), "A": self.A[n].tolist(),
                            "A_variation": self.A_variation[n]} for n in sorted(self.M)]}


def rough_smooth_decompose(F: CylindricalFunctional, path: SampledPath, seq="uniform",
                           p: int = 2, eval_times=None, levels=(8,)) -> Decomposition:
    """Split ``F(., S)`` into a compensated-sum integral ``M`` and a remainder ``A``.

    ``M_n`` is the functional compensated integral, ``A_n = F(., S) - F(0, S_0) - M_n``,
    and ``A_variation[n]`` is the p-th variation sum of ``A_n`` along ``pi_n``.
    Uniqueness needs ``[S]^p`` strictly increasing; the diagnostic flags a
    failure when some increment of the finest-level variation over the
    evaluation grid vanishes or the variation collapses across levels.
    """
    seq = _check_functional(F, path, seq, p)
    t = _eval_times(path, eval_times)
    lv = _levels(levels)
    base = F.on_path(path, np.zeros(1))[0]
    lhs = F.on_path(path, t) - base
    M, A, var = {}, {}, {}
    for n in lv:
        part = seq(n)
        M[n] = _functional_sums(F, path, part, t, range(1, p))
        A[n] = lhs - M[n]
        # A_n at the partition points themselves
        _, _, X = _functional_at_partition(F, path, part)
        Mj = _functional_sums(F, path, part, part.times, range(1, p))
        var[n] = float(np.sum(np.abs(np.diff(X - base - Mj)) ** p))
    grid = np.unique(np.concatenate([[0.0], t, [path.horizon]]))
    qv = pth_variation_scalar(path, seq, p, lv, grid, convention="right")
    fin, coarse = qv[lv[-1]], qv[lv[0]]
    min_inc = float(np.min(np.diff(fin)))
    collapse = bool(fin[-1] < 0.25 * coarse[-1]) if len(lv) > 1 else False
    ok = min_inc > 0 and not collapse
    diag = {"min_variation_increment": min_inc, "variation_collapse": collapse,
            "variation_total": {int(n): float(qv[n][-1]) for n in lv}}
    return Decomposition(t, M, A, var, p, ok, diag)
