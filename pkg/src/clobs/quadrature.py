"""Nested-grid composite trapezoid for window averages of band-limited signals."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import ResourceExhausted

CHUNK = 1 << 14


def _weighted_sum(accumulate, ts, weights):
    total = None
    for start in range(0, len(ts), CHUNK):
        part = accumulate(ts[start:start + CHUNK], weights[start:start + CHUNK])
        total = part if total is None else total + part
    return total


def window_mean(accumulate: Callable[[np.ndarray, np.ndarray], np.ndarray],
                t0: float, T: float, max_freq: float, rtol: float = 1e-8,
                points_per_period: int = 20, max_doublings: int = 14):
    """Mean of a signal over ``[t0, t0 + T]`` by doubling trapezoid grids.

    ``accumulate(ts, w)`` returns ``sum_k w[k] f(ts[k])`` for the sampled
    signal ``f`` (any array shape). The starting grid resolves the
    shortest period ``2 pi / max_freq`` with ``points_per_period``
    samples. Each doubling reuses earlier samples and only evaluates the
    new midpoints; iteration stops once two successive estimates agree to
    ``rtol`` in max-norm relative to the estimate.
    """
    periods = T * max(max_freq, 1e-300) / (2 * math.pi)
    n = max(8, int(math.ceil(points_per_period * periods)))
    ts = t0 + T * np.arange(n + 1) / n
    w = np.ones(n + 1)
    w[0] = w[-1] = 0.5
    raw = _weighted_sum(accumulate, ts, w)
    estimate = raw / n
    for _ in range(max_doublings):
        mids = t0 + T * (np.arange(n) + 0.5) / n
        raw = raw + _weighted_sum(accumulate, mids, np.ones(n))
        n *= 2
        new = raw / n
        scale = max(np.max(np.abs(new)), 1e-300)
        if np.max(np.abs(new - estimate)) <= rtol * scale:
            return new
        estimate = new
    raise ResourceExhausted(
        f"trapezoid mean did not reach rtol={rtol} with {n + 1} samples")
