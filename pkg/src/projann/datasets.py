"""Synthetic dataset generators and the binary point-file format."""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

from .embedding import make_rng
from .kann_tree import point_distances

MAGIC = b"LDNN"
VERSION = 1
_HEADER = struct.Struct("<4sIQI")


class InfeasibleSpecError(RuntimeError):
    pass


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class PlantedSpec:
    n: int
    d: int
    n_queries: int = 100
    R: float = 2.0
    epsilon: float = 0.5
    coord_range: tuple[float, float] = (-20.0, 20.0)
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.coord_range
        if self.n_queries < 1 or self.n < self.n_queries:
            raise ValueError(f"need 1 <= n_queries <= n, got n={self.n}, n_queries={self.n_queries}")
        if self.d < 1 or self.R <= 0 or not hi > lo:
            raise ValueError("need d >= 1, R > 0 and a non-empty coordinate range")


@dataclass(frozen=True)
class GaussianSpec:
    n_per_query: int
    d: int
    n_queries: int = 100
    var_range: tuple[float, float] = (15.0, 25.0)
    coord_range: tuple[float, float] = (-20.0, 20.0)
    seed: int = 0

    def __post_init__(self):
        if self.n_per_query < 1 or self.n_queries < 1 or self.d < 1:
            raise ValueError("n_per_query, n_queries and d must be positive")
        if self.var_range[1] < self.var_range[0] or self.var_range[0] < 0:
            raise ValueError(f"bad variance range {self.var_range}")
        if not self.coord_range[1] > self.coord_range[0]:
            raise ValueError(f"bad coordinate range {self.coord_range}")


def _min_dist_to(queries, points):
    # squared-expansion distances; only used for rejection tests
    sq = (
        (points * points).sum(axis=1)[:, None]
        - 2.0 * points @ queries.T
        + (queries * queries).sum(axis=1)[None, :]
    )
    return np.sqrt(np.maximum(sq, 0.0))


def gen_planted(spec: PlantedSpec, validate: bool = False):
    """Planted nearest-neighbor instance.

    Each query gets exactly one data point at distance ``R``; every other
    data point lies at least ``(1 + epsilon) R`` from every query.  Planted
    points occupy rows ``0 .. n_queries-1`` of ``X``.

    Returns ``(X, Q, planted)`` with ``planted`` a list of
    ``(query_idx, point_idx)`` pairs.
    """
    rng = make_rng(spec.seed)
    lo, hi = spec.coord_range
    d, m = spec.d, spec.n_queries
    far = (1.0 + spec.epsilon) * spec.R
    cap = 1000 * spec.n
    attempts = 0

    Q = rng.uniform(lo, hi, size=(m, d))
    X = np.empty((spec.n, d))
    for j in range(m):
        others = np.delete(Q, j, axis=0)
        while True:
            attempts += 1
            if attempts > cap:
                raise InfeasibleSpecError(f"gave up after {cap} rejection attempts")
            u = rng.standard_normal(d)
            p = Q[j] + spec.R * u / np.linalg.norm(u)
            if len(others) == 0 or point_distances(others, p).min() >= far:
                X[j] = p
                break

    filled = m
    batch = max(64, spec.n - m)
    while filled < spec.n:
        cand = rng.uniform(lo, hi, size=(batch, d))
        nearest = _min_dist_to(Q, cand).min(axis=1)
        # the expanded form is inexact; rescan candidates near the threshold
        ok = nearest >= far * (1.0 + 1e-6)
        suspect = ~ok & (nearest >= far * (1.0 - 1e-6))
        for i in np.flatnonzero(suspect):
            ok[i] = point_distances(Q, cand[i]).min() >= far
        attempts += batch
        if attempts > cap and filled < spec.n:
            raise InfeasibleSpecError(f"gave up after {cap} rejection attempts")
        take = cand[ok][: spec.n - filled]
        X[filled:filled + len(take)] = take
        filled += len(take)

    planted = [(j, j) for j in range(m)]
    if validate:
        verify_planted(X, Q, planted, spec.R, spec.epsilon)
    return X, Q, planted


def verify_planted(X, Q, planted, R: float, epsilon: float, tol: float = 1e-9) -> None:
    """Full scan of the planted property; raises AssertionError on violation."""
    far = (1.0 + epsilon) * R
    for qi, pi in planted:
        dist = point_distances(X, Q[qi])
        if abs(dist[pi] - R) > tol:
            raise AssertionError(f"query {qi}: planted point at {dist[pi]!r}, expected {R}")
        close = np.flatnonzero(dist < far)
        if close.tolist() != [pi]:
            raise AssertionError(f"query {qi}: points {close.tolist()} within {far}")


def gen_gaussian(spec: GaussianSpec):
    """Gaussian clusters centered on uniform queries.

    Query ``j`` gets variance ``s2_j ~ U(var_range)`` and ``n_per_query``
    points with iid ``N(q_j, s2_j)`` coordinates, stored in rows
    ``j*n_per_query .. (j+1)*n_per_query-1``.  Returns ``(X, Q)``.
    """
    rng = make_rng(spec.seed)
    lo, hi = spec.coord_range
    Q = rng.uniform(lo, hi, size=(spec.n_queries, spec.d))
    variances = rng.uniform(spec.var_range[0], spec.var_range[1], size=spec.n_queries)
    noise = rng.standard_normal((spec.n_queries, spec.n_per_query, spec.d))
    X = Q[:, None, :] + np.sqrt(variances)[:, None, None] * noise
    return X.reshape(-1, spec.d), Q


def write_dataset(path, X) -> None:
    X = np.asarray(X, dtype="<f8")
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"need a non-empty (n, d) array, got shape {X.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, X.shape[0], X.shape[1]))
        fh.write(np.ascontiguousarray(X).tobytes())


def read_dataset(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise DatasetFormatError(f"{path}: truncated header at byte {len(data)}")
    magic, version, n, d = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise DatasetFormatError(f"{path}: bad magic {magic!r} at byte 0")
    if version != VERSION:
        raise DatasetFormatError(f"{path}: unsupported version {version} at byte 4")
    if n < 1:
        raise DatasetFormatError(f"{path}: n must be positive at byte 8")
    if d < 1:
        raise DatasetFormatError(f"{path}: d must be positive at byte 16")
    expected = _HEADER.size + 8 * n * d
    if len(data) != expected:
        raise DatasetFormatError(
            f"{path}: expected {expected} bytes, file has {len(data)} (payload from byte {_HEADER.size})"
        )
    X = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(n, d)
    return X.astype(np.float64)


def write_planted_sidecar(path, X, Q, planted) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["query_idx", "point_idx", "distance"])
        for qi, pi in planted:
            w.writerow([qi, pi, repr(float(np.linalg.norm(X[pi] - Q[qi])))])


def read_planted_sidecar(path) -> list[tuple[int, int]]:
    with open(path, newline="") as fh:
        return [(int(r["query_idx"]), int(r["point_idx"])) for r in csv.DictReader(fh)]
