"""
Sampled paths, test-path generators and step approximations.

A :class:`SampledPath` stores values on a uniform grid ``t_i = i T / N`` and
is evaluated between grid points by linear interpolation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class PathError(ValueError):
    """Invalid path data or generator parameters."""


@dataclass(frozen=True)
class SampledPath:
    """Continuous path observed on a uniform time grid.

    Parameters
    ----------
    horizon : float
        Terminal time ``T > 0``.
    values : ndarray, shape (num_samples, dim) or (num_samples,)
        Path values at ``t_i = i * T / (num_samples - 1)``.
    """

    horizon: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[1] < 1:
            raise PathError("values must have shape (num_samples, dim)")
        if v.shape[0] < 2:
            raise PathError("need at least two samples")
        if not np.all(np.isfinite(v)):
            raise PathError("path values must be finite")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise PathError("horizon must be a positive finite number")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "horizon", float(self.horizon))

    @property
    def num_samples(self) -> int:
        return self.values.shape[0]

    @property
    def num_steps(self) -> int:
        return self.values.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def dt(self) -> float:
        return self.horizon / self.num_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.num_samples)

    @property
    def x(self) -> np.ndarray:
        """Values of a scalar path as a 1-D array."""
        if self.dim != 1:
            raise PathError("x is only defined for scalar paths")
        return self.values[:, 0]

    def grid_position(self, t) -> np.ndarray:
        """Fractional grid index of time(s) ``t``, snapped to integers within 1e-9."""
        pos = np.asarray(t, dtype=float) / self.dt
        near = np.rint(pos)
        return np.where(np.abs(pos - near) < 1e-9, near, pos)

    def __call__(self, t) -> np.ndarray:
        """Linearly interpolated value(s); shape ``t.shape + (dim,)``."""
        t = np.asarray(t, dtype=float)
        if np.any(t < -1e-12 * self.horizon) or np.any(t > self.horizon * (1 + 1e-12)):
            raise PathError("evaluation time outside [0, T]")
        pos = np.clip(self.grid_position(t), 0.0, self.num_steps)
        i = np.minimum(np.floor(pos).astype(np.int64), self.num_steps - 1)
        w = (pos - i)[..., None]
        lo = self.values[i]
        hi = self.values[i + 1]
        # exact samples on grid points (no 0 * x rounding)
        return np.where(w == 0.0, lo, np.where(w == 1.0, hi, lo + w * (hi - lo)))

    def component(self, v: Sequence[float]) -> "SampledPath":
        """Scalar path ``t -> v . S(t)``."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise PathError("direction has wrong dimension")
        return SampledPath(self.horizon, self.values @ v)

    def scaled(self, c: float) -> "SampledPath":
        return SampledPath(self.horizon, c * self.values)

    def to_csv(self, fname) -> None:
        header = ["t"] + [f"x{i + 1}" for i in range(self.dim)]
        with open(fname, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for t, row in zip(self.times, self.values):
                w.writerow([repr(float(t))] + [repr(float(a)) for a in row])

    @classmethod
    def from_csv(cls, fname, rtol: float = 1e-9) -> "SampledPath":
        """Read a path written by :meth:`to_csv`; the time grid must be uniform."""
        with open(fname, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][0].strip() != "t" or len(rows[0]) < 2:
            raise PathError("path CSV header must be 't,x1[,x2,...]'")
        ncol = len(rows[0])
        try:
            data = np.array([[float(a) for a in r] for r in rows[1:] if r], dtype=float)
        except ValueError as exc:
            raise PathError(f"malformed path CSV: {exc}") from None
        if data.ndim != 2 or data.shape[1] != ncol or data.shape[0] < 2:
            raise PathError("malformed path CSV: ragged rows or too few samples")
        t = data[:, 0]
        T = t[-1]
        expected = np.arange(len(t)) * (T / (len(t) - 1))
        if t[0] != 0.0 or T <= 0 or np.max(np.abs(t - expected)) > rtol * T:
            raise PathError("path CSV time grid is not uniform on [0, T]")
        return cls(T, data[:, 1:])


@dataclass(frozen=True)
class StepPath:
    """Right-continuous piecewise-constant path.

    ``values[j]`` holds on ``[breakpoints[j], breakpoints[j+1])``;
    ``terminal`` is the value at the final breakpoint ``T``. ``initial`` is
    the value reported as the left limit at time 0.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    terminal: np.ndarray = field(default=None)
    initial: np.ndarray = field(default=None)

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if len(b) < 2 or np.any(np.diff(b) <= 0):
            raise PathError("breakpoints must be strictly increasing, at least two")
        if v.shape[0] != len(b) - 1:
            raise PathError("need one value per interval")
        term = v[-1] if self.terminal is None else np.atleast_1d(np.asarray(self.terminal, float))
        init = v[0] if self.initial is None else np.atleast_1d(np.asarray(self.initial, float))
        object.__setattr__(self, "initial", init)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "terminal", term)

    @property
    def horizon(self) -> float:
        return float(self.breakpoints[-1])

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        j = np.searchsorted(self.breakpoints, t, side="right") - 1
        j = np.clip(j, 0, len(self.values) - 1)
        out = self.values[j]
        at_end = t >= self.breakpoints[-1]
        return np.where(at_end[..., None], self.terminal, out)

    def left_limit(self, t) -> np.ndarray:
        """``lim_{r -> t-}`` of the step path; ``initial`` at ``t = 0``."""
        t = np.asarray(t, dtype=float)
        j = np.searchsorted(self.breakpoints, t, side="left") - 1
        out = self.values[np.clip(j, 0, len(self.values) - 1)]
        return np.where((j < 0)[..., None], self.initial, out)

    def integral(self, h, t) -> np.ndarray:
        """``int_0^t h(step(s)) ds`` for scalar step paths, exact."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        b = self.breakpoints
        hv = np.asarray(h(self.values[:, 0]), dtype=float)
        cum = np.concatenate([[0.0], np.cumsum(hv * np.diff(b))])
        j = np.clip(np.searchsorted(b, t, side="right") - 1, 0, len(hv) - 1)
        return cum[j] + hv[j] * (np.minimum(t, b[-1]) - b[j])


def _rng(seed, index: int = 0) -> np.random.Generator:
    # per-path stream: hash of (master seed, path index)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def fgn_autocovariance(hurst: float, k) -> np.ndarray:
    """Autocovariance of unit-step fractional Gaussian noise at lags ``k``."""
    k = np.abs(np.asarray(k, dtype=float))
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** h2 - 2 * k ** h2 + np.abs(k - 1) ** h2)


def _circulant_eigenvalues(hurst: float, n: int) -> np.ndarray:
    m = 1 << max(1, int(math.ceil(math.log2(2 * (n - 1)))) if n > 1 else 1)
    lags = np.concatenate([np.arange(m // 2 + 1), np.arange(m // 2 - 1, 0, -1)])
    return np.fft.fft(fgn_autocovariance(hurst, lags)).real


def fgn(hurst: float, n: int, rng: np.random.Generator, method: str = "auto") -> np.ndarray:
    """Unit-step fractional Gaussian noise of length ``n``.

    Uses circulant embedding (Davies-Harte / Wood-Chan) of the increment
    covariance on a power-of-two circle. If the embedding has materially
    negative eigenvalues the exact Cholesky factorisation is used for
    ``n <= 4096``; larger ``n`` raise :class:`PathError`.
    """
    if method not in ("auto", "circulant", "cholesky"):
        raise PathError(f"unknown fgn method {method!r}")
    if method != "cholesky":
        lam = _circulant_eigenvalues(hurst, n)
        if lam.min() >= -1e-10 * lam.max():
            m = len(lam)
            z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
            w = np.fft.fft(np.sqrt(np.clip(lam, 0.0, None) / m) * z)
            return w.real[:n]
        if method == "circulant" or n > 4096:
            raise PathError("circulant embedding is not positive semi-definite")
    if n > 4096:
        raise PathError("Cholesky fallback limited to n <= 4096")
    idx = np.arange(n)
    cov = fgn_autocovariance(hurst, idx[:, None] - idx[None, :])
    return np.linalg.cholesky(cov) @ rng.standard_normal(n)


def generate_fbm(hurst: float, horizon: float = 1.0, num_steps: int = 1024,
                 seed: int = 0, dim: int = 1, path_index: int = 0,
                 method: str = "auto") -> SampledPath:
    """Fractional Brownian motion with independent coordinates.

    The sample is bit-reproducible for fixed
    ``(seed, path_index, hurst, horizon, num_steps, dim)``.
    """
    if not (0.0 < hurst < 1.0):
        raise PathError("Hurst index must lie in (0, 1)")
    if num_steps < 2 or dim < 1:
        raise PathError("need num_steps >= 2 and dim >= 1")
    rng = _rng(seed, path_index)
    scale = (horizon / num_steps) ** hurst
    cols = []
    for _ in range(dim):
        inc = fgn(hurst, num_steps, rng, method) * scale
        cols.append(np.concatenate([[0.0], np.cumsum(inc)]))
    return SampledPath(horizon, np.stack(cols, axis=1))


def generate_analytic(kind: str, params: dict | None = None, horizon: float = 1.0,
                      num_steps: int = 1024) -> SampledPath:
    """Sample a closed-form path on the uniform grid.

    ``kind`` is one of

    * ``line``: ``intercept + slope * t`` (slope may be a vector),
    * ``sine``: ``amplitude * sin(2 pi frequency t + phase)``,
    * ``polynomial``: ``sum_k coeffs[k] t**k``,
    * ``weierstrass``: ``sum_{k<terms} a**k cos(pi b**k t)``.
    """
    params = dict(params or {})
    if num_steps < 2:
        raise PathError("need num_steps >= 2")
    t = np.linspace(0.0, horizon, num_steps + 1)
    try:
        if kind == "line":
            slope = np.atleast_1d(np.asarray(params.pop("slope", 1.0), float))
            icpt = np.broadcast_to(np.asarray(params.pop("intercept", 0.0), float), slope.shape)
            vals = icpt[None, :] + t[:, None] * slope[None, :]
        elif kind == "sine":
            amp = float(params.pop("amplitude", 1.0))
            freq = float(params.pop("frequency", 1.0))
            phase = float(params.pop("phase", 0.0))
            vals = amp * np.sin(2 * np.pi * freq * t + phase)
        elif kind == "polynomial":
            coeffs = np.asarray(params.pop("coeffs"), float)
            if coeffs.ndim != 1 or len(coeffs) == 0:
                raise PathError("polynomial needs a non-empty 1-D coeffs list")
            vals = np.polynomial.polynomial.polyval(t, coeffs)
        elif kind == "weierstrass":
            a = float(params.pop("a", 0.5))
            b = float(params.pop("b", 3.0))
            terms = int(params.pop("terms", 20))
            if not (0 < a < 1) or b <= 0 or terms < 1:
                raise PathError("weierstrass needs 0 < a < 1, b > 0, terms >= 1")
            k = np.arange(terms)
            vals = (a ** k[None, :] * np.cos(np.pi * b ** k[None, :] * t[:, None])).sum(axis=1)
        else:
            raise PathError(f"unknown analytic path kind {kind!r}")
    except KeyError as exc:
        raise PathError(f"missing parameter {exc}") from None
    if params:
        raise PathError(f"unused parameters for {kind}: {sorted(params)}")
    return SampledPath(horizon, vals)


def constant_path(value: float = 0.0, horizon: float = 1.0, num_steps: int = 16) -> SampledPath:
    return SampledPath(horizon, np.full(num_steps + 1, float(value)))


def piecewise_constant_approx(path: SampledPath, times) -> StepPath:
    """Step approximation taking the value ``S(t_{j+1})`` on ``[t_j, t_{j+1})``.

    ``times`` is a partition of ``[0, T]`` (array or object with ``.times``).
    """
    stored = getattr(times, "values", None)
    times = np.asarray(getattr(times, "times", times), dtype=float)
    if times.size < 2:
        raise PathError("partition must contain at least two points")
    v = path(times) if stored is None else np.asarray(stored, float).reshape(len(times), -1)
    return StepPath(times, v[1:], terminal=v[-1], initial=v[0])
