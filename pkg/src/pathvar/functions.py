"""
Smooth test functions with closed-form derivatives.

Scalar functions return derivatives as arrays matching the input; functions
on R^d return the order-k derivative in packed symmetric storage, shape
``(m, ncoeff)`` for ``m`` points.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np
from numpy.polynomial import polynomial as P

from .tensors import SymTensor, dense_to_coeffs, evaluate_form, num_coeffs, sym_power_coeffs


class FunctionError(ValueError):
    pass


class Density(NamedTuple):
    """Polynomial density ``sum_i coeffs[i] (x - center)**i`` on ``[lower, inf)``."""

    lower: float
    center: float
    coeffs: tuple


class StieltjesMeasure(NamedTuple):
    """Point masses ``(location, mass)`` plus piecewise-polynomial densities."""

    atoms: tuple
    densities: tuple


class SmoothFunction:
    """Function ``f: R^d -> R`` with derivatives up to ``order``.

    Parameters
    ----------
    dim : int
    deriv : callable
        ``deriv(k, x)``; ``x`` has shape ``(m,)`` when ``dim == 1`` and
        ``(m, dim)`` otherwise.
    order : int or None
        Highest available derivative (``None`` for unlimited).
    name : str
    measure : callable, optional
        ``measure(k)`` returns the :class:`StieltjesMeasure` of
        ``d f^{(k)}`` (scalar, piecewise-polynomial families only).
    """

    def __init__(self, dim: int, deriv: Callable, order: int | None = None,
                 name: str = "f", measure: Callable | None = None):
        self.dim = int(dim)
        self._deriv = deriv
        self.order = order
        self.name = name
        self._measure = measure

    def __repr__(self):
        return f"SmoothFunction({self.name!r}, dim={self.dim})"

    def _prep(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            if x.ndim == 2 and x.shape[1] == 1:
                x = x[:, 0]
            return x
        if x.shape[-1] != self.dim:
            raise FunctionError(f"expected points in R^{self.dim}")
        return x

    def derivative(self, k: int, x) -> np.ndarray:
        if k < 0:
            raise FunctionError("derivative order must be >= 0")
        if self.order is not None and k > self.order:
            raise FunctionError(f"{self.name} has derivatives only up to order {self.order}")
        return np.asarray(self._deriv(k, self._prep(x)), dtype=float)

    def __call__(self, x) -> np.ndarray:
        return self.derivative(0, x)

    def grad(self, k: int, x) -> SymTensor:
        """``nabla^k f(x)`` at a single point as a :class:`SymTensor`."""
        x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
        c = self.derivative(k, x if self.dim > 1 else x[:, 0])
        return SymTensor(k, self.dim, np.reshape(c, -1))

    def has_order(self, k: int) -> bool:
        return self.order is None or k <= self.order

    def stieltjes_measure(self, k: int) -> StieltjesMeasure:
        """Measure ``d f^{(k)}`` for piecewise-polynomial families."""
        if self._measure is None:
            raise FunctionError(f"{self.name}: d f^({k}) is not available in closed form")
        return self._measure(k)

    def __add__(self, other: "SmoothFunction") -> "SmoothFunction":
        if other.dim != self.dim:
            raise FunctionError("dim mismatch")
        orders = [o for o in (self.order, other.order) if o is not None]
        meas = None
        if self._measure is not None and other._measure is not None:
            def meas(k):
                a, b = self._measure(k), other._measure(k)
                return StieltjesMeasure(a.atoms + b.atoms, a.densities + b.densities)
        return SmoothFunction(self.dim, lambda k, x: self._deriv(k, x) + other._deriv(k, x),
                              min(orders) if orders else None,
                              f"{self.name}+{other.name}", meas)

    def scale(self, c: float) -> "SmoothFunction":
        c = float(c)
        meas = None
        if self._measure is not None:
            def meas(k):
                m = self._measure(k)
                return StieltjesMeasure(tuple((a, c * w) for a, w in m.atoms),
                                        tuple(Density(d.lower, d.center, tuple(c * q for q in d.coeffs))
                                              for d in m.densities))
        return SmoothFunction(self.dim, lambda k, x: c * self._deriv(k, x), self.order,
                              f"{c}*{self.name}", meas)


def _poly_measure(coeffs):
    def meas(k):
        d = P.polyder(np.asarray(coeffs, float), k + 1)
        return StieltjesMeasure((), (Density(-np.inf, 0.0, tuple(d.tolist())),))
    return meas


def polynomial(coeffs) -> SmoothFunction:
    """``sum_i coeffs[i] x**i``."""
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))

    def deriv(k, x):
        d = P.polyder(c, k) if k else c
        return P.polyval(x, d) if d.size else np.zeros_like(x)

    return SmoothFunction(1, deriv, None, f"poly{tuple(c.tolist())}", _poly_measure(c))


def monomial(m: int) -> SmoothFunction:
    """``x**m``."""
    if m < 0:
        raise FunctionError("monomial degree must be >= 0")
    f = polynomial([0.0] * m + [1.0])
    f.name = f"x^{m}"
    return f


def _trig(kind: str, a: float, b: float) -> SmoothFunction:
    a, b = float(a), float(b)
    if kind == "exp":
        def deriv(k, x):
            return a ** k * np.exp(a * x + b)
    else:
        shift = 0.0 if kind == "sin" else np.pi / 2

        def deriv(k, x):
            return a ** k * np.sin(a * x + b + shift + k * np.pi / 2)
    return SmoothFunction(1, deriv, None, f"{kind}({a}x+{b})")


def cos(a: float = 1.0, b: float = 0.0) -> SmoothFunction:
    """``cos(a x + b)``."""
    return _trig("cos", a, b)


def sin(a: float = 1.0, b: float = 0.0) -> SmoothFunction:
    """``sin(a x + b)``."""
    return _trig("sin", a, b)


def exp(a: float = 1.0, b: float = 0.0) -> SmoothFunction:
    """``exp(a x + b)``."""
    return _trig("exp", a, b)


def ramp(a: float = 0.0, m: int = 1) -> SmoothFunction:
    """``((x - a)^+)**m / m!``.

    Derivatives exist through order ``m``; the order-``m`` derivative is the
    right-continuous step ``1{x >= a}``, so ``d f^{(m-1)}`` has a density and
    ``d f^{(m)}`` is the unit mass at ``a``.
    """
    a, m = float(a), int(m)
    if m < 0:
        raise FunctionError("ramp order must be >= 0")

    def deriv(k, x):
        r = m - k
        y = x - a
        if r == 0:
            return (y >= 0).astype(float)
        return np.where(y > 0, np.maximum(y, 0.0) ** r / math.factorial(r), 0.0)

    def meas(k):
        if k > m:
            raise FunctionError(f"ramp of order {m} has no measure d f^({k})")
        r = m - k
        if r == 0:
            return StieltjesMeasure(((a, 1.0),), ())
        c = [0.0] * (r - 1) + [1.0 / math.factorial(r - 1)]
        return StieltjesMeasure((), (Density(a, a, tuple(c)),))

    return SmoothFunction(1, deriv, m, f"ramp(a={a},m={m})", meas)


def quadratic_form(A) -> SmoothFunction:
    """``x^T A x`` for symmetric ``A``."""
    A = np.asarray(A, dtype=float)
    A = 0.5 * (A + A.T)
    d = A.shape[0]
    H = dense_to_coeffs(2 * A)

    def deriv(k, x):
        x = np.atleast_2d(x)
        if k == 0:
            return np.einsum("mi,ij,mj->m", x, A, x)
        if k == 1:
            return 2 * x @ A
        if k == 2:
            return np.broadcast_to(H, (x.shape[0], H.size)).copy()
        return np.zeros((x.shape[0], num_coeffs(d, k)))

    return SmoothFunction(d, deriv, None, "quadratic")


def ridge(w, g: SmoothFunction) -> SmoothFunction:
    """``g(w . x)``; ``nabla^k f(x) = g^{(k)}(w . x) w^{(x) k}``."""
    w = np.asarray(w, dtype=float)
    if g.dim != 1:
        raise FunctionError("ridge profile must be scalar")

    def deriv(k, x):
        x = np.atleast_2d(x)
        s = x @ w
        gk = g.derivative(k, s)
        if k == 0:
            return gk
        return gk[:, None] * sym_power_coeffs(w, k)[None, :]

    return SmoothFunction(len(w), deriv, g.order, f"ridge({g.name})")


_BUILTINS = {
    "monomial": lambda m=2: monomial(int(m)),
    "x": lambda: monomial(1),
    "cos": cos,
    "sin": sin,
    "exp": exp,
    "ramp": lambda a=0.0, m=1: ramp(a, int(m)),
}


def function_from_spec(spec: str, p: int | None = None) -> SmoothFunction:
    """Parse ``name:param=value,...``.

    Names: ``monomial:m=4``, ``x``, ``cos:a=1,b=0``, ``sin``, ``exp``,
    ``ramp:a=0,m=3``, ``poly:c=1;0;2`` (ascending coefficients).  For ``ramp``
    the order ``m`` defaults to ``p - 1`` when ``p`` is given.
    """
    name, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise FunctionError(f"malformed parameter {item!r} in {spec!r}")
        params[key.strip()] = val.strip()
    name = name.strip()
    try:
        if name == "poly":
            coeffs = params.pop("c")
            if params:
                raise FunctionError(f"unused parameters for poly: {sorted(params)}")
            return polynomial([float(c) for c in coeffs.split(";")])
        if name == "ramp" and "m" not in params and p is not None:
            params["m"] = str(p - 1)
        if name not in _BUILTINS:
            raise FunctionError(f"unknown function {name!r}")
        return _BUILTINS[name](**{k: float(v) for k, v in params.items()})
    except FunctionError:
        raise
    except (TypeError, KeyError, ValueError) as exc:
        raise FunctionError(f"bad parameters for {name!r}: {exc}") from None


def check_derivatives(f: SmoothFunction, points, max_order: int, h: float = 1e-5,
                      seed: int = 0) -> float:
    """Largest relative mismatch between ``nabla^k f`` and a central difference of ``nabla^{k-1} f``.

    For ``dim > 1`` the comparison is along random unit directions ``v``:
    ``d/ds <nabla^{k-1} f(x + s v), v^{k-1}> = <nabla^k f(x), v^k>``.
    """
    pts = np.asarray(points, dtype=float)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(1, max_order + 1):
        if f.dim == 1:
            fd = (f.derivative(k - 1, pts + h) - f.derivative(k - 1, pts - h)) / (2 * h)
            ex = f.derivative(k, pts)
        else:
            v = rng.standard_normal(pts.shape)
            v /= np.linalg.norm(v, axis=1, keepdims=True)

            def along(j, x):
                d = f.derivative(j, x)
                return d if j == 0 else evaluate_form(d, v, j)

            fd = (along(k - 1, pts + h * v) - along(k - 1, pts - h * v)) / (2 * h)
            ex = evaluate_form(f.derivative(k, pts), v, k)
        scale = np.maximum(1.0, np.abs(ex))
        worst = max(worst, float(np.max(np.abs(fd - ex) / scale)))
    return worst
