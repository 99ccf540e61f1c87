"""Dynamic time warping over chromagram frames.

The distance between two frame sequences is the minimum over all monotone
warping paths (steps down/right/diagonal, endpoints pinned) of the path's
mean per-cell cost, i.e. accumulated cost divided by the number of cells
on the path.  Minimizing the mean, rather than the raw sum, keeps the
value in [0, 1] and stops long unrelated files from looking dissimilar
purely because of length.

Per-cell cost is cosine distance ``1 - dot / sqrt(|a|^2 * |b|^2)`` with
the silent-frame conventions cost(x, 0) = 1 and cost(0, 0) = 0.  The
single-sqrt form matters: squared norms of binary frames are exact
integers, so identical frames cost exactly 0.0 and the self-distance
invariant holds without tolerance.

The minimization runs as a DP layered by path length: layer L holds the
cheapest accumulated cost over paths of exactly L cells.  Cells reachable
at layer L satisfy ``max(i, j) + 1 <= L <= i + j + 1``.  Cost is
O(n * m * min(n, m)), which is fine at sixteenth-grid frame counts; the
kernel is numba-compiled when numba is importable, with a pure-numpy
fallback.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None


def cost_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise cosine distance between frame rows, conventions included."""
    af = a.astype(np.float64)
    bf = b.astype(np.float64)
    dot = af @ bf.T
    na2 = (af * af).sum(axis=1)
    nb2 = (bf * bf).sum(axis=1)
    denom = np.sqrt(np.outer(na2, nb2))
    with np.errstate(divide="ignore", invalid="ignore"):
        cost = 1.0 - dot / denom
    a_zero = na2 == 0.0
    b_zero = nb2 == 0.0
    cost[a_zero, :] = 1.0
    cost[:, b_zero] = 1.0
    cost[np.ix_(a_zero, b_zero)] = 0.0
    return cost


def _min_mean_path_py(cost: np.ndarray) -> float:
    n, m = cost.shape
    inf = np.inf
    prev = np.full((n, m), inf)  # layer ell-1 band; inf everywhere else
    cur = np.full((n, m), inf)   # stale layer ell-2 band
    prev[0, 0] = cost[0, 0]
    best = cost[0, 0] / 1.0 if (n == 1 and m == 1) else inf
    for ell in range(2, n + m):
        stale = ell - 2
        if stale >= 1:  # wipe the band cur held two layers ago
            for i in range(max(0, stale - m), min(n, stale)):
                for j in range(max(0, stale - 1 - i), min(m, stale)):
                    cur[i, j] = inf
        for i in range(max(0, ell - m), min(n, ell)):
            for j in range(max(0, ell - 1 - i), min(m, ell)):
                c = inf
                if i > 0 and prev[i - 1, j] < c:
                    c = prev[i - 1, j]
                if j > 0 and prev[i, j - 1] < c:
                    c = prev[i, j - 1]
                if i > 0 and j > 0 and prev[i - 1, j - 1] < c:
                    c = prev[i - 1, j - 1]
                cur[i, j] = c + cost[i, j] if c < inf else inf
        if cur[n - 1, m - 1] < inf:
            cand = cur[n - 1, m - 1] / ell
            if cand < best:
                best = cand
        prev, cur = cur, prev
    return best


_min_mean_path = njit(cache=True, nogil=True)(_min_mean_path_py) if njit else _min_mean_path_py


def dtw_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Mean-cost DTW distance in [0, 1]; 1.0 if either input is empty."""
    if a.shape[0] == 0 or b.shape[0] == 0:
        return 1.0
    if a.shape == b.shape and np.array_equal(a, b):
        return 0.0
    return float(_min_mean_path(cost_matrix(a, b)))
