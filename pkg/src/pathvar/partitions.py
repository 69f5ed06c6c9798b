"""
Partitions of [0, T]: uniform dyadic grids and dyadic Lebesgue partitions.

The Lebesgue partition at level ``n`` records the successive times at which
the (linearly interpolated) path reaches a new point of ``2**-n * Z``.
Crossing times are exact roots of the linear interpolant.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .paths import PathError, SampledPath


class ResolutionError(RuntimeError):
    """Level ``n`` is not resolvable on the sampling grid of the path."""


@dataclass(frozen=True)
class Partition:
    """Strictly increasing times ``0 = t_0 < ... < t_N = T``.

    For Lebesgue partitions ``values`` holds the exact path values at the
    partition points (grid levels ``k * 2**-n`` except possibly the first and
    last point) and ``grid_index`` the integer ``k`` (``on_grid`` marks which
    points are genuine hits of the dyadic grid).
    """

    times: np.ndarray
    scheme: str = "uniform"
    level: int | None = None
    values: np.ndarray | None = None
    grid_index: np.ndarray | None = None
    on_grid: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise PathError("a partition needs at least two points")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise PathError("partition times must start at 0 and increase strictly")
        object.__setattr__(self, "times", t)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def num_intervals(self) -> int:
        return len(self.times) - 1

    @property
    def mesh(self) -> float:
        return float(np.max(np.diff(self.times)))

    def to_csv(self, fname) -> None:
        with open(fname, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"])
            for t in self.times:
                w.writerow([repr(float(t))])


def uniform_dyadic(n: int, horizon: float = 1.0) -> Partition:
    """``{k T / 2**n : k = 0..2**n}``."""
    if n < 0:
        raise ValueError("level must be non-negative")
    return Partition(np.linspace(0.0, horizon, 2 ** n + 1), "uniform", n)


def resolution_ok(path: SampledPath, n: int) -> bool:
    """True if every sample increment is strictly smaller than ``2**-n``."""
    return bool(np.max(np.abs(np.diff(path.x))) < 2.0 ** -n)


def _level_hits(x: np.ndarray, delta: float):
    """All hits of ``delta * Z`` by the piecewise-linear path, in time order.

    Returns the fractional grid position of each hit and the hit level index.
    The start point of a segment is excluded, its end point included, so each
    hit is reported once.
    """
    a, b = x[:-1], x[1:]
    fa, fb = np.floor(a / delta), np.floor(b / delta)
    ca, cb = np.ceil(a / delta), np.ceil(b / delta)
    up = b > a
    down = b < a
    count = np.where(up, fb - fa, np.where(down, ca - cb, 0)).astype(np.int64)
    first = np.where(up, fa + 1, ca - 1)
    step = np.where(up, 1, -1)
    seg = np.repeat(np.arange(len(a)), count)
    starts = np.concatenate([[0], np.cumsum(count)[:-1]])
    r = np.arange(count.sum()) - np.repeat(starts, count)
    k = first[seg] + step[seg] * r
    frac = (k * delta - a[seg]) / (b[seg] - a[seg])
    return seg + frac, k.astype(np.int64)


def lebesgue_dyadic(path: SampledPath, n: int, check_resolution: bool = True) -> Partition:
    """Dyadic Lebesgue partition of level ``n`` generated by a scalar path.

    ``tau_0 = 0`` and ``tau_{j+1}`` is the first time after ``tau_j`` at
    which the path hits ``2**-n Z`` away from ``S(tau_j)``; ``T`` is appended.

    Raises
    ------
    ResolutionError
        If ``check_resolution`` and some sample increment is ``>= 2**-n``.
    """
    if path.dim != 1:
        raise PathError("Lebesgue partitions are defined for scalar paths only")
    if check_resolution and not resolution_ok(path, n):
        raise ResolutionError(f"level {n} is not resolvable: sample increments reach 2**-{n}")
    delta = 2.0 ** -n
    x = path.x
    pos, k = _level_hits(x, delta)
    k0 = x[0] / delta
    start_on_grid = k0 == np.floor(k0)
    if k.size:
        prev = np.concatenate([[int(k0) if start_on_grid else k[0] + 1], k[:-1]])
        keep = k != prev
        pos, k = pos[keep], k[keep]
    N = path.num_steps
    times = np.minimum(pos * path.dt, path.horizon)
    times = np.where(pos == N, path.horizon, times)
    vals = k * delta
    t_all = np.concatenate([[0.0], times])
    v_all = np.concatenate([[x[0]], vals])
    idx = np.concatenate([[int(k0) if start_on_grid else 0], k])
    on = np.concatenate([[start_on_grid], np.ones(k.size, bool)])
    if t_all[-1] < path.horizon:
        t_all = np.append(t_all, path.horizon)
        v_all = np.append(v_all, x[-1])
        idx = np.append(idx, 0)
        on = np.append(on, False)
    if np.any(np.diff(t_all) <= 0):
        raise ResolutionError("crossing times collapse in floating point; lower the level")
    return Partition(t_all, "lebesgue", n, v_all[:, None], idx, on)


@dataclass
class PartitionSequence:
    """Family of partitions indexed by level ``n``.

    ``scheme`` is ``"uniform"`` (dyadic, ``k T / 2**n``) or ``"lebesgue"``
    (generated by ``path``, scalar only).
    """

    scheme: str
    path: SampledPath
    check_resolution: bool = True
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.scheme not in ("uniform", "lebesgue"):
            raise ValueError(f"unknown partition scheme {self.scheme!r}")
        if self.scheme == "lebesgue" and self.path.dim != 1:
            raise PathError("Lebesgue partitions are defined for scalar paths only")

    def __call__(self, n: int) -> Partition:
        if n not in self._cache:
            if self.scheme == "uniform":
                self._cache[n] = uniform_dyadic(n, self.path.horizon)
            else:
                self._cache[n] = lebesgue_dyadic(self.path, n, self.check_resolution)
        return self._cache[n]

    partition = __call__


def as_sequence(path: SampledPath, seq) -> PartitionSequence:
    """Accept a :class:`PartitionSequence` or a scheme name."""
    if isinstance(seq, PartitionSequence):
        if seq.path is not path:
            raise ValueError("partition sequence was built for a different path")
        return seq
    return PartitionSequence(str(seq), path)


def partition_values(path: SampledPath, part: Partition) -> np.ndarray:
    """Path values at the partition points, shape ``(len(part), dim)``."""
    if part.values is not None:
        return part.values
    return path(part.times)


def oscillation(path: SampledPath, part: Partition) -> float:
    """``max_j max_{r,s in [t_j, t_{j+1}]} |S(s) - S(r)|`` on the interpolated path.

    For vector paths the coordinatewise range is used (sup-norm diameter).
    """
    if abs(part.horizon - path.horizon) > 1e-12 * path.horizon:
        raise PathError("partition and path horizons differ")
    grid_t = path.times
    pv = partition_values(path, part)
    t = np.concatenate([part.times, grid_t])
    v = np.concatenate([pv, path.values])
    # partition points first at ties so every interval block starts at its left end
    order = np.lexsort((np.r_[np.zeros(len(part)), np.ones(len(grid_t))], t))
    v = v[order]
    starts = np.flatnonzero(order < len(part))
    blocks = starts[:-1]
    hi = np.maximum.reduceat(v, blocks, axis=0)
    lo = np.minimum.reduceat(v, blocks, axis=0)
    # include the right end point of each interval
    hi = np.maximum(hi, v[starts[1:]])
    lo = np.minimum(lo, v[starts[1:]])
    return float(np.max(hi - lo))


class CrossingCounts(NamedTuple):
    up: int
    down: int
    total: int


def lebesgue_legs(part: Partition, t: float | None = None):
    """Completed grid-to-grid legs of a Lebesgue partition ending by time ``t``.

    Returns ``(start_index, end_index)`` integer arrays; a leg from ``k`` to
    ``k + 1`` is an upcrossing of ``(k 2**-n, (k+1) 2**-n]``.
    """
    if part.scheme != "lebesgue":
        raise ValueError("crossing counts need a Lebesgue partition")
    t_end = part.horizon if t is None else t
    ok = part.on_grid[:-1] & part.on_grid[1:] & (part.times[1:] <= t_end)
    return part.grid_index[:-1][ok], part.grid_index[1:][ok]


def cell_crossings(part: Partition, t: float | None = None):
    """Up- and downcrossing counts of every cell ``I_k = (k d, (k+1) d]``.

    Returns ``(k_min, up, down)`` where ``up[i]`` counts cell ``k_min + i``.
    """
    s, e = lebesgue_legs(part, t)
    if s.size == 0:
        return 0, np.zeros(0, np.int64), np.zeros(0, np.int64)
    cell = np.minimum(s, e)
    k_min = int(cell.min())
    m = int(cell.max()) - k_min + 1
    up = np.bincount(cell[e > s] - k_min, minlength=m)
    down = np.bincount(cell[e < s] - k_min, minlength=m)
    return k_min, up, down


def crossing_counts(path: SampledPath, n: int, k: int, t: float | None = None,
                    check_resolution: bool = True) -> CrossingCounts:
    """Completed up/downcrossings of ``(k 2**-n, (k+1) 2**-n]`` up to time ``t``."""
    part = lebesgue_dyadic(path, n, check_resolution)
    k_min, up, down = cell_crossings(part, t)
    i = k - k_min
    if 0 <= i < len(up):
        u, d = int(up[i]), int(down[i])
    else:
        u = d = 0
    return CrossingCounts(u, d, u + d)
