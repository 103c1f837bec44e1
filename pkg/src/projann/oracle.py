"""Exact brute-force reference computations.

Everything here is a linear scan; the approximate structures elsewhere in
the package are validated against these functions.
"""
from __future__ import annotations

import math

import numpy as np

from .embedding import ProjectionMap, make_rng, project
from .kann_tree import Neighbor, point_distances


def _as_points(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected an (n, d) point array, got shape {X.shape}")
    return X


def brute_knn(X, q, k: int) -> list[Neighbor]:
    """Exact k nearest neighbors, ordered by (distance, index)."""
    X = _as_points(X)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    dist = point_distances(X, np.asarray(q, dtype=np.float64))
    order = np.lexsort((np.arange(n), dist))[:k]
    return [Neighbor(int(i), float(dist[i])) for i in order]


def rank(X_proj, fq, fp) -> int:
    """Number of points of ``X_proj`` in the closed ball around ``fq`` through ``fp``.

    This is the ``k`` a k-NN query at ``fq`` needs for ``fp`` to be returned.
    """
    X_proj = _as_points(X_proj)
    fq = np.asarray(fq, dtype=np.float64)
    radius = point_distances(np.asarray(fp, dtype=np.float64)[None, :], fq)[0]
    return int(np.count_nonzero(point_distances(X_proj, fq) <= radius))


def eps_nn_set(X, q, epsilon: float) -> list[int]:
    """Indices of every point within ``(1 + epsilon)`` times the nearest distance."""
    X = _as_points(X)
    if X.shape[0] == 0:
        raise ValueError("empty point set")
    dist = point_distances(X, np.asarray(q, dtype=np.float64))
    return np.flatnonzero(dist <= (1.0 + epsilon) * dist.min()).tolist()


def bad_candidate_count(X, q, u, pmap: ProjectionMap, epsilon: float, c: float = 1.0) -> int:
    """Count far points whose projections land close to the projected query.

    With ``u`` the exact nearest neighbor of ``q`` and ``r = ||u - q||``,
    counts ``x`` with ``||x - q|| > c(1+eps) r`` and
    ``||f(x) - f(q)|| <= c(1+eps/2) r``.  Retrieval of ``u`` among ``k``
    candidates can only fail when this count reaches ``k``.
    """
    X = _as_points(X)
    q = np.asarray(q, dtype=np.float64)
    r = float(np.linalg.norm(np.asarray(u, dtype=np.float64) - q))
    beta = c * (1.0 + epsilon / 2.0)
    gamma = c * (1.0 + epsilon)
    far = point_distances(X, q) > gamma * r
    near = point_distances(project(pmap, X), project(pmap, q)) <= beta * r
    return int(np.count_nonzero(far & near))


def expansion_rate(X, rho_threshold: int, centers: int = 100, seed: int = 0) -> float:
    """Empirical lower estimate of the expansion constant of ``X``.

    For up to ``centers`` sampled points ``p`` and radii ``r`` equal to the
    distances from ``p`` to its neighbors of rank 1, 2, 4, ... (``ceil(log2
    n)`` radii), returns the largest ``|B_p(2r)| / |B_p(r)|`` over balls with
    ``|B_p(r)| >= rho_threshold``.  Returns 1.0 when no ball qualifies.
    """
    X = _as_points(X)
    n = X.shape[0]
    if not 1 <= rho_threshold <= n:
        raise ValueError(f"rho_threshold must lie in [1, {n}]")
    if centers >= n:
        sample = np.arange(n)
    else:
        sample = np.sort(make_rng(seed).choice(n, size=centers, replace=False))
    n_radii = max(1, math.ceil(math.log2(n))) if n > 1 else 1
    ranks = np.minimum(2 ** np.arange(n_radii), n - 1)
    best = 1.0
    for p in sample:
        dist = np.sort(point_distances(X, X[p]))
        for r in np.unique(dist[ranks]):
            inner = np.searchsorted(dist, r, side="right")
            if inner < rho_threshold:
                continue
            outer = np.searchsorted(dist, 2.0 * r, side="right")
            best = max(best, outer / inner)
    return float(best)
