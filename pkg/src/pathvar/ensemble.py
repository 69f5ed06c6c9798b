"""
Deterministic Monte Carlo ensembles.

Path ``i`` of an ensemble is generated from its own RNG stream derived from
``(seed, i)``, so results do not depend on the number of worker threads or
on execution order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from .paths import generate_fbm


def resolve_threads(threads: int | None = None) -> int:
    """Explicit value, else ``PATHVAR_THREADS``, else the CPU count."""
    if threads is None:
        env = os.environ.get("PATHVAR_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return int(threads)


def run_ensemble(job: Callable[[int], object], num_paths: int, threads: int | None = None) -> list:
    """``[job(0), ..., job(num_paths - 1)]``, evaluated on a thread pool."""
    n = resolve_threads(threads)
    if n == 1 or num_paths <= 1:
        return [job(i) for i in range(num_paths)]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(job, range(num_paths)))


def fbm_job(hurst: float, horizon: float, num_steps: int, seed: int, fn: Callable, dim: int = 1):
    """Job generating path ``i`` of an fBm ensemble and applying ``fn`` to it."""
    def job(i):
        return fn(generate_fbm(hurst, horizon, num_steps, seed, dim=dim, path_index=i))
    return job


def median(values) -> float:
    return float(np.median(np.asarray(values, dtype=float)))
