"""
p-th variation along partition sequences.

For a partition ``pi_n`` the cumulative sums

    mu^n([0, t]) = sum_{t_j <= t} |S(t_{j+1}) - S(t_j)|^p

are computed at a set of evaluation times, per level.  Vector paths give
tensor-valued sums of ``(S(t_{j+1}) - S(t_j))^{(x) p}`` in packed storage, and
odd ``p`` gives signed sums along Lebesgue partitions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .partitions import Partition, as_sequence, cell_crossings, partition_values
from .paths import SampledPath
from .tensors import SymTensor, multiplicities, pairing_coeffs, sym_power_coeffs


def _levels(levels) -> tuple:
    lv = tuple(int(n) for n in levels)
    if not lv:
        raise ValueError("need at least one level")
    if any(n < 0 for n in lv) or len(set(lv)) != len(lv):
        raise ValueError("levels must be distinct non-negative integers")
    return tuple(sorted(lv))


def _eval_times(path: SampledPath, eval_times) -> np.ndarray:
    if eval_times is None:
        return np.array([path.horizon])
    t = np.atleast_1d(np.asarray(eval_times, dtype=float))
    if np.any(t < 0) or np.any(t > path.horizon * (1 + 1e-12)):
        raise ValueError("evaluation times must lie in [0, T]")
    return np.minimum(t, path.horizon)


def term_counts(times: np.ndarray, t, convention: str = "left") -> np.ndarray:
    """Number of partition intervals counted up to ``t``.

    ``"left"`` counts ``[t_j, t_{j+1}]`` with ``t_j <= t`` (all intervals at
    ``t = T``); ``"right"`` counts those with ``t_{j+1} <= t``.
    """
    t = np.asarray(t, dtype=float)
    if convention == "left":
        return np.searchsorted(times[:-1], t, side="right")
    if convention == "right":
        return np.searchsorted(times[1:], t, side="right")
    raise ValueError(f"unknown convention {convention!r}")


def cumulative(terms: np.ndarray, times: np.ndarray, t, convention: str = "left") -> np.ndarray:
    """Cumulative sums of per-interval ``terms`` evaluated at ``t``."""
    terms = np.asarray(terms, dtype=float)
    c = np.concatenate([np.zeros((1,) + terms.shape[1:]), np.cumsum(terms, axis=0)])
    return c[term_counts(times, t, convention)]


def increments(path: SampledPath, part: Partition) -> np.ndarray:
    """``S(t_{j+1}) - S(t_j)`` along ``part``, shape ``(N, dim)``."""
    return np.diff(partition_values(path, part), axis=0)


@dataclass(frozen=True)
class VariationProfile:
    """Per-level cumulative variation ``t -> mu^n([0, t])``.

    ``values[n]`` has shape ``(len(eval_times),)`` for scalar and signed
    profiles, ``(len(eval_times), ncoeff)`` for tensor profiles.
    """

    p: float
    scheme: str
    eval_times: np.ndarray
    values: dict
    kind: str = "scalar"
    dim: int = 1
    convention: str = "left"
    extras: dict = field(default_factory=dict)

    @property
    def levels(self) -> tuple:
        return tuple(sorted(self.values))

    @property
    def finest(self) -> int:
        return self.levels[-1]

    def __getitem__(self, n: int) -> np.ndarray:
        return self.values[n]

    def tensor(self, n: int, i: int = -1) -> SymTensor:
        if self.kind != "tensor":
            raise ValueError("not a tensor profile")
        return SymTensor(int(self.p), self.dim, self.values[n][i])

    def paired(self, v) -> "VariationProfile":
        """Scalar profile ``<mu^n([0, t]), v^{(x) p}>`` of a tensor profile."""
        if self.kind != "tensor":
            raise ValueError("not a tensor profile")
        v = np.asarray(v, dtype=float)
        w = sym_power_coeffs(v, int(self.p))
        vals = {n: pairing_coeffs(a, w, self.dim, int(self.p)) for n, a in self.values.items()}
        return VariationProfile(self.p, self.scheme, self.eval_times, vals, "scalar", 1,
                                self.convention)

    def to_json(self) -> dict:
        out = {"p": self.p, "scheme": self.scheme, "kind": self.kind, "dim": self.dim,
               "convention": self.convention, "levels": []}
        for n in self.levels:
            rec = {"n": n, "times": self.eval_times.tolist(), "values": np.asarray(self.values[n]).tolist()}
            rec.update({k: v for k, v in self.extras.get(n, {}).items()})
            out["levels"].append(rec)
        if len(self.levels) >= 2:
            out["diagnostics"] = convergence_diagnostic(self).to_json()
        return out


def _check_even(p) -> float:
    p = float(p)
    if p <= 0:
        raise ValueError("p must be positive")
    if p == int(p) and int(p) % 2 == 1:
        raise ValueError("odd integer p gives signed sums; use signed_pth_sums")
    return p


def pth_variation_scalar(path: SampledPath, seq="uniform", p: float = 2, levels=(8,),
                         eval_times=None, convention: str = "left") -> VariationProfile:
    """Cumulative p-th variation of a scalar path along a partition sequence.

    Parameters
    ----------
    path : SampledPath
        Scalar path (``dim == 1``).
    seq : PartitionSequence or {"uniform", "lebesgue"}
    p : float
        Even integer (non-integer ``p`` is accepted for q-variation probes).
    levels : iterable of int
    eval_times : array_like, optional
        Defaults to ``[T]``.
    convention : {"left", "right"}
        Which intervals count up to ``t``; see :func:`term_counts`.

    Raises
    ------
    ResolutionError
        For Lebesgue levels that the sampling grid cannot resolve.
    """
    if path.dim != 1:
        raise ValueError("scalar variation needs a scalar path; use pth_variation_tensor")
    p = _check_even(p)
    seq = as_sequence(path, seq)
    t = _eval_times(path, eval_times)
    vals, extras = {}, {}
    for n in _levels(levels):
        part = seq(n)
        terms = np.abs(increments(path, part)[:, 0]) ** p
        vals[n] = cumulative(terms, part.times, t, convention)
        extras[n] = {"num_intervals": part.num_intervals,
                     "max_term": float(terms.max(initial=0.0))}
    return VariationProfile(p, seq.scheme, t, vals, "scalar", 1, convention, extras)


def pth_variation_tensor(path: SampledPath, seq="uniform", p: int = 2, levels=(8,),
                         eval_times=None, convention: str = "left") -> VariationProfile:
    """Tensor p-th variation: cumulative sums of ``(Delta S)^{(x) p}`` (packed)."""
    p = int(_check_even(p))
    seq = as_sequence(path, seq)
    if seq.scheme != "uniform" and path.dim > 1:
        raise ValueError("tensor variation of vector paths uses uniform partitions")
    t = _eval_times(path, eval_times)
    vals, extras = {}, {}
    for n in _levels(levels):
        part = seq(n)
        terms = sym_power_coeffs(increments(path, part), p)
        vals[n] = cumulative(terms, part.times, t, convention)
        norms = np.sqrt(np.sum(multiplicities(path.dim, p) * terms ** 2, axis=1))
        extras[n] = {"num_intervals": part.num_intervals, "max_term": float(norms.max(initial=0.0))}
    return VariationProfile(p, seq.scheme, t, vals, "tensor", path.dim, convention, extras)


def signed_pth_sums(path: SampledPath, seq="lebesgue", p: int = 3, levels=(8,),
                    eval_times=None) -> VariationProfile:
    """Signed sums ``sum_{t_j <= t} (S(t_{j+1}) - S(t_j))^p`` for odd ``p``.

    ``extras[n]`` carries the crossing bound: with ``U``, ``D`` the completed
    up/downcrossings of each cell, the completed legs contribute
    ``2**(-n p) * sum_k (U_k - D_k)``, bounded by ``2**(-n p)`` times the number
    of visited cells; the non-grid first and last legs are reported apart.
    """
    p = int(p)
    if p < 3 or p % 2 == 0:
        raise ValueError("signed sums need an odd integer p >= 3")
    seq = as_sequence(path, seq)
    if seq.scheme != "lebesgue":
        raise ValueError("signed odd-p sums are taken along Lebesgue partitions")
    t = _eval_times(path, eval_times)
    vals, extras = {}, {}
    for n in _levels(levels):
        part = seq(n)
        dS = increments(path, part)[:, 0]
        terms = dS ** p
        vals[n] = cumulative(terms, part.times, t, "left")
        _, up, down = cell_crossings(part)
        on = part.on_grid
        legs = on[:-1] & on[1:]
        edge = float(np.sum(np.abs(terms[~legs])))
        extras[n] = {
            "crossing_bound": float(2.0 ** (-n * p) * np.count_nonzero(up + down)),
            "crossing_mass": float(2.0 ** (-n * p) * np.sum(up + down)),
            "edge_terms": edge,
        }
    return VariationProfile(p, seq.scheme, t, vals, "signed", 1, "left", extras)


@dataclass(frozen=True)
class VariationDiagnostic:
    """Cauchy differences between consecutive levels, last-level limit and atom proxies."""

    levels: tuple
    cauchy: np.ndarray
    limit: np.ndarray
    max_jump: float
    max_term: float | None

    def to_json(self) -> dict:
        return {"levels": list(self.levels), "cauchy": self.cauchy.tolist(),
                "limit": np.asarray(self.limit).tolist(), "max_jump": self.max_jump,
                "max_term": self.max_term}


def _size(a: np.ndarray, prof: VariationProfile) -> np.ndarray:
    if prof.kind == "tensor":
        w = multiplicities(prof.dim, int(prof.p))
        return np.sqrt(np.sum(w * a ** 2, axis=-1))
    return np.abs(a)


def convergence_diagnostic(profile: VariationProfile) -> VariationDiagnostic:
    """Convergence evidence for a multi-level profile.

    ``cauchy[i]`` is ``sup_t |v_{n_i}(t) - v_{n_{i+1}}(t)|`` over the
    evaluation times; the limit estimate is the finest level as is;
    ``max_jump`` is the largest increment of the finest-level cumulative
    function between adjacent evaluation times (starting from 0).
    """
    lv = profile.levels
    if len(lv) < 2:
        raise ValueError("convergence diagnostics need at least two levels")
    cauchy = np.array([float(np.max(_size(profile[a] - profile[b], profile)))
                       for a, b in zip(lv[:-1], lv[1:])])
    last = np.asarray(profile[lv[-1]])
    steps = np.diff(np.concatenate([np.zeros((1,) + last.shape[1:]), last]), axis=0)
    max_term = profile.extras.get(lv[-1], {}).get("max_term")
    return VariationDiagnostic(lv, cauchy, last, float(np.max(_size(steps, profile))), max_term)
