"""Sup norms and Hölder seminorms of sampled data."""
from __future__ import annotations

import numpy as np

MAX_PAIRS = 10 ** 6


def pair_subsample(n: int, max_pairs: int = MAX_PAIRS) -> np.ndarray:
    """Evenly spaced indices so that all pairs among them number at most ``max_pairs``."""
    m = int((1 + np.sqrt(1 + 8 * max_pairs)) // 2)
    if n <= m:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, m).round().astype(int))


def holder_seminorm(grid, values, gamma: float = 1.0, max_pairs: int = MAX_PAIRS) -> float:
    """``sup |f(x) - f(y)| / |x - y|^gamma`` over sampled pairs.

    Consecutive pairs are always included; the remaining pairs come from a
    deterministic even subsample.  ``values`` may be (M,) or (M, k); vector
    samples use the Euclidean norm.
    """
    x = np.asarray(grid, dtype=float)
    f = np.asarray(values)
    if f.ndim == 1:
        f = f[:, None]
    if x.size < 2:
        return 0.0
    best = float(np.max(np.linalg.norm(np.diff(f, axis=0), axis=1) / np.diff(x) ** gamma))
    idx = pair_subsample(x.size, max_pairs)
    xs, fs = x[idx], f[idx]
    for i in range(idx.size - 1):
        num = np.linalg.norm(fs[i + 1:] - fs[i], axis=1)
        den = (xs[i + 1:] - xs[i]) ** gamma
        best = max(best, float(np.max(num / den)))
    return best


def sup_norm(values) -> float:
    f = np.asarray(values)
    if f.ndim > 1:
        return float(np.max(np.linalg.norm(f, axis=-1)))
    return float(np.max(np.abs(f))) if f.size else 0.0
