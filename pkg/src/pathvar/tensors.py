"""
Symmetric tensors over R^d in packed monomial storage.

A symmetric tensor of order ``k`` is stored as one coefficient per
multi-index ``alpha`` (``|alpha| = k``), namely the common value of the
components ``T[i_1, ..., i_k]`` whose index multiset has counts ``alpha``.
The full contraction of two tensors is therefore
``sum_alpha mult(alpha) * T_alpha * P_alpha`` with the multinomial
multiplicity ``mult(alpha) = k! / prod(alpha_i!)``.

The module-level functions work on coefficient arrays with arbitrary leading
batch dimensions; :class:`SymTensor` wraps a single tensor.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, NamedTuple, Sequence

import numpy as np


class TensorError(ValueError):
    pass


@lru_cache(maxsize=None)
def multi_indices(dim: int, order: int) -> np.ndarray:
    """Exponent vectors of all monomials of degree ``order`` in ``dim`` variables."""
    rows = []
    for combo in itertools.combinations_with_replacement(range(dim), order):
        a = [0] * dim
        for i in combo:
            a[i] += 1
        rows.append(a)
    out = np.array(rows, dtype=np.int64).reshape(-1, dim)
    out.setflags(write=False)
    return out


def num_coeffs(dim: int, order: int) -> int:
    return math.comb(order + dim - 1, dim - 1)


@lru_cache(maxsize=None)
def multiplicities(dim: int, order: int) -> np.ndarray:
    f = math.factorial
    m = np.array([f(order) // math.prod(f(int(a)) for a in al)
                  for al in multi_indices(dim, order)], dtype=float)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=None)
def _position(dim: int, order: int) -> dict:
    return {tuple(int(x) for x in a): i for i, a in enumerate(multi_indices(dim, order))}


def monomials(v, order: int) -> np.ndarray:
    """``v**alpha`` for every multi-index; ``v`` has shape ``(..., dim)``."""
    v = np.asarray(v, dtype=float)
    al = multi_indices(v.shape[-1], order)
    if order == 0:
        return np.ones(v.shape[:-1] + (1,))
    # integer powers via repeated products keep exactness for small ints
    out = np.ones(v.shape[:-1] + (len(al),))
    for i in range(v.shape[-1]):
        e = al[:, i]
        if np.any(e):
            out = out * v[..., i:i + 1] ** e
    return out


def sym_power_coeffs(v, order: int) -> np.ndarray:
    """Packed coefficients of ``v^{(x) order}`` (batched)."""
    return monomials(v, order)


def pairing_coeffs(a, b, dim: int, order: int) -> np.ndarray:
    """Full contraction of packed tensors of equal order (batched)."""
    return np.sum(multiplicities(dim, order) * np.asarray(a) * np.asarray(b), axis=-1)


def evaluate_form(coeffs, v, order: int) -> np.ndarray:
    """``<T, v^{(x) order}>``, the homogeneous polynomial of ``T`` at ``v``."""
    v = np.asarray(v, dtype=float)
    return pairing_coeffs(coeffs, monomials(v, order), v.shape[-1], order)


@lru_cache(maxsize=None)
def _outer_weights(dim: int, la: int, lb: int) -> np.ndarray:
    """Dense weights ``W[o, a, b]`` with ``Sym(A (x) B)_o = sum W A_a B_b``."""
    out = multi_indices(dim, la + lb)
    pa, pb = _position(dim, la), _position(dim, lb)
    W = np.zeros((len(out), len(pa), len(pb)))
    scale = math.factorial(la) * math.factorial(lb) / math.factorial(la + lb)
    for o, alpha in enumerate(out):
        for beta in multi_indices(dim, la):
            if np.any(beta > alpha):
                continue
            gamma = alpha - beta
            w = scale * math.prod(math.comb(int(x), int(y)) for x, y in zip(alpha, beta))
            W[o, pa[tuple(int(x) for x in beta)], pb[tuple(int(x) for x in gamma)]] += w
    W.setflags(write=False)
    return W


def sym_outer_coeffs(a, b, dim: int, la: int, lb: int) -> np.ndarray:
    """Packed ``Sym(A (x) B)`` for orders ``la`` and ``lb`` (batched)."""
    return np.einsum("oab,...a,...b->...o", _outer_weights(dim, la, lb),
                     np.asarray(a, float), np.asarray(b, float))


@lru_cache(maxsize=None)
def _contract_weights(dim: int, big: int, small: int) -> np.ndarray:
    """Weights for contracting an order-``big`` tensor with an order-``small`` one."""
    out = multi_indices(dim, big - small)
    py = _position(dim, big)
    ps = _position(dim, small)
    mult = multiplicities(dim, small)
    W = np.zeros((len(out), len(py), len(ps)))
    for o, gamma in enumerate(out):
        for j, beta in enumerate(multi_indices(dim, small)):
            W[o, py[tuple(int(x) for x in gamma + beta)], ps[tuple(int(x) for x in beta)]] = mult[j]
    W.setflags(write=False)
    return W


def contract_coeffs(y, x, dim: int, big: int, small: int) -> np.ndarray:
    """Partial contraction ``<Y, X>`` of order ``big - small`` (batched)."""
    if small > big:
        raise TensorError("cannot contract a lower-order tensor against a higher one")
    return np.einsum("oyx,...y,...x->...o", _contract_weights(dim, big, small),
                     np.asarray(y, float), np.asarray(x, float))


@lru_cache(maxsize=None)
def _orbit_index(dim: int, order: int) -> np.ndarray:
    """Packed slot of every raw index, flattened in C order."""
    pos = _position(dim, order)
    raw = np.array(list(itertools.product(range(dim), repeat=order)), dtype=np.int64)
    counts = np.stack([(raw == i).sum(axis=1) for i in range(dim)], axis=1)
    return np.array([pos[tuple(a)] for a in counts], dtype=np.int64)


def dense_to_coeffs(t) -> np.ndarray:
    """Symmetrize a raw dense tensor of shape ``(dim,) * order`` into packed form.

    Each slot is the mean over its permutation orbit, taken relative to the
    sorted-index entry so already symmetric input is reproduced exactly.
    """
    t = np.asarray(t, dtype=float)
    order = t.ndim
    dim = t.shape[0] if order else 1
    if order == 0:
        return t.reshape(1)
    if any(s != dim for s in t.shape):
        raise TensorError("raw tensor must have equal dimensions on every axis")
    slot = _orbit_index(dim, order)
    flat = t.reshape(-1)
    m = num_coeffs(dim, order)
    # flat index of the sorted representative of each slot
    rep = np.zeros(m, dtype=np.int64)
    rep[slot[::-1]] = np.arange(len(slot))[::-1]
    ref = flat[rep]
    dev = np.bincount(slot, weights=flat - ref[slot], minlength=m)
    return ref + dev / np.bincount(slot, minlength=m)


def coeffs_to_dense(c, dim: int, order: int) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if order == 0:
        return c.reshape(())
    out = np.empty((dim,) * order)
    pos = _position(dim, order)
    for idx in itertools.product(range(dim), repeat=order):
        a = [0] * dim
        for i in idx:
            a[i] += 1
        out[idx] = c[pos[tuple(a)]]
    return out


@dataclass(frozen=True)
class SymTensor:
    """Symmetric tensor of a given order over R^dim (packed)."""

    order: int
    dim: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if self.order < 0 or self.dim < 1:
            raise TensorError("order must be >= 0 and dim >= 1")
        if c.size != num_coeffs(self.dim, self.order):
            raise TensorError(
                f"order {self.order}, dim {self.dim} needs {num_coeffs(self.dim, self.order)} coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, order: int, dim: int) -> "SymTensor":
        return cls(order, dim, np.zeros(num_coeffs(dim, order)))

    @classmethod
    def scalar(cls, value: float, dim: int = 1) -> "SymTensor":
        return cls(0, dim, [value])

    @classmethod
    def from_dense(cls, t) -> "SymTensor":
        t = np.asarray(t, dtype=float)
        dim = t.shape[0] if t.ndim else 1
        return cls(t.ndim, dim, dense_to_coeffs(t))

    def to_dense(self) -> np.ndarray:
        return coeffs_to_dense(self.coeffs, self.dim, self.order)

    def _check(self, other: "SymTensor"):
        if not isinstance(other, SymTensor):
            raise TensorError("expected a SymTensor")
        if other.order != self.order or other.dim != self.dim:
            raise TensorError("order/dim mismatch")

    def __add__(self, other):
        self._check(other)
        return SymTensor(self.order, self.dim, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return SymTensor(self.order, self.dim, self.coeffs - other.coeffs)

    def __neg__(self):
        return SymTensor(self.order, self.dim, -self.coeffs)

    def __mul__(self, c: float):
        return SymTensor(self.order, self.dim, float(c) * self.coeffs)

    __rmul__ = __mul__

    def __truediv__(self, c: float):
        return SymTensor(self.order, self.dim, self.coeffs / float(c))

    def norm(self) -> float:
        """Frobenius norm of the full tensor."""
        return math.sqrt(max(pairing(self, self), 0.0))

    def __call__(self, v) -> float:
        """``<T, v (x) ... (x) v>``."""
        return float(evaluate_form(self.coeffs, v, self.order))

    def to_json(self) -> dict:
        al = multi_indices(self.dim, self.order)
        return {"order": self.order, "dim": self.dim,
                "coefficients": {".".join(str(int(x)) for x in a): float(c)
                                 for a, c in zip(al, self.coeffs)}}

    @classmethod
    def from_json(cls, obj: dict) -> "SymTensor":
        order, dim = int(obj["order"]), int(obj["dim"])
        pos = _position(dim, order)
        c = np.zeros(num_coeffs(dim, order))
        for key, val in obj["coefficients"].items():
            a = tuple(int(x) for x in key.split("."))
            if a not in pos:
                raise TensorError(f"multi-index {key} does not match order {order}, dim {dim}")
            c[pos[a]] = float(val)
        return cls(order, dim, c)


def sym_power(v: Sequence[float], order: int) -> SymTensor:
    """``v^{(x) order}``; order 0 gives the scalar 1."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    return SymTensor(order, len(v), sym_power_coeffs(v, order))


def symmetrize(t) -> SymTensor:
    """Average of a raw dense tensor over all index permutations."""
    return SymTensor.from_dense(t)


def pairing(a: SymTensor, b: SymTensor) -> float:
    """Full contraction of two symmetric tensors of equal order and dim."""
    a._check(b)
    return float(pairing_coeffs(a.coeffs, b.coeffs, a.dim, a.order))


def sym_outer(a: SymTensor, b: SymTensor) -> SymTensor:
    """``Sym(A (x) B)`` of order ``A.order + B.order``."""
    if a.dim != b.dim:
        raise TensorError("dim mismatch")
    return SymTensor(a.order + b.order, a.dim,
                     sym_outer_coeffs(a.coeffs, b.coeffs, a.dim, a.order, b.order))


def contract(y: SymTensor, x: SymTensor) -> SymTensor:
    """``<Y, X>`` of order ``Y.order - X.order``, contracting all indices of ``X``."""
    if y.dim != x.dim:
        raise TensorError("dim mismatch")
    return SymTensor(y.order - x.order, y.dim,
                     contract_coeffs(y.coeffs, x.coeffs, y.dim, y.order, x.order))


class PositivityResult(NamedTuple):
    positive: bool
    witness: np.ndarray | None
    min_value: float

    def __bool__(self):
        return self.positive


def is_positive(t: SymTensor, directions: int = 256, seed: int = 0,
                rtol: float = 1e-12) -> PositivityResult:
    """Search for ``v`` with ``<T, v^{(x) p}> < 0`` among axes and random unit vectors.

    A ``True`` result only means that no violating direction was found.
    """
    if t.order % 2:
        raise TensorError("positivity is defined for even orders")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((directions, t.dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    v = np.concatenate([np.eye(t.dim), v])
    vals = evaluate_form(t.coeffs, v, t.order)
    i = int(np.argmin(vals))
    tol = rtol * max(float(np.max(np.abs(t.coeffs))), 1e-300)
    if vals[i] < -tol:
        return PositivityResult(False, v[i], float(vals[i]))
    return PositivityResult(True, None, float(vals[i]))


@dataclass(frozen=True)
class GradedTensor:
    """Element of ``Sym_0 + Sym_1 + ... + Sym_p`` over R^dim."""

    levels: tuple

    def __post_init__(self):
        lv = tuple(self.levels)
        if not lv:
            raise TensorError("need at least level 0")
        dim = lv[0].dim
        for k, t in enumerate(lv):
            if t.order != k or t.dim != dim:
                raise TensorError("level k must be a SymTensor of order k with common dim")
        object.__setattr__(self, "levels", lv)

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def dim(self) -> int:
        return self.levels[0].dim

    def __getitem__(self, k: int) -> SymTensor:
        return self.levels[k]

    def sym_product(self, other: "GradedTensor") -> "GradedTensor":
        """Truncated ``Sym(self (x) other)``, levelwise sum of ``Sym(A_l (x) B_{k-l})``."""
        p = min(self.depth, other.depth)
        out = []
        for k in range(p + 1):
            acc = SymTensor.zeros(k, self.dim)
            for l in range(k + 1):
                acc = acc + sym_outer(self[l], other[k - l])
            out.append(acc)
        return GradedTensor(tuple(out))


def shuffles(l: int, k: int) -> Iterator[tuple]:
    """Permutations of ``range(l + k)`` keeping the first ``l`` and last ``k`` in order.

    Yields ``sigma`` as a tuple with ``sigma[i]`` the image of ``i``.
    """
    n = l + k
    for first in itertools.combinations(range(n), l):
        rest = [i for i in range(n) if i not in first]
        yield tuple(first) + tuple(rest)
