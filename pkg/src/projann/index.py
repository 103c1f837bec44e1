"""Approximate nearest neighbor index: random projection + k-NN tree + rescan.

A query is projected, its ``k`` approximate nearest neighbors are found by
the tree in the reduced space, and the candidates are re-ranked by their
true distance in the original space.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .embedding import (
    DimensionParams,
    heuristic_dimension,
    project,
    sample_projection,
    target_dimension,
    target_dimension_expansion,
)
from .kann_tree import KannTree, Neighbor, point_distances

log = logging.getLogger(__name__)

K_RULES = ("explicit", "n_pow_rho", "sqrt_n", "ln_n")
DPRIME_RULES = ("theorem1", "heuristic_logn", "expansion", "explicit")


def rho_exponent(n: int, epsilon: float, c_tilde: float = 1.0, c_prime: float = 7.0) -> float:
    """Query-time exponent: ``k = n**rho`` balances tree search against rescanning."""
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if c_tilde <= 0.0 or not 1.0 < c_prime <= 7.0:
        raise ValueError(f"need c_tilde > 0 and c_prime in (1, 7], got {c_tilde}, {c_prime}")
    eps2 = epsilon * epsilon
    ln_n = math.log(n)
    if 1.0 / epsilon <= ln_n:
        inner = math.log(c_prime * ln_n)
    else:
        inner = math.log(c_prime / epsilon)
    return 1.0 - eps2 / (2.0 * c_tilde * (eps2 + inner))


@dataclass(frozen=True)
class AnnConfig:
    """Build parameters for :class:`AnnIndex`.

    ``k_rule`` chooses the candidate count: ``explicit`` (uses ``k``),
    ``n_pow_rho`` (``ceil(n**rho)``), ``sqrt_n`` or ``ln_n`` (both rounded
    up).  ``dprime_rule`` chooses the reduced dimension: ``theorem1``,
    ``heuristic_logn``, ``expansion`` (uses ``expansion_c`` and
    ``expansion_rho``) or ``explicit`` (uses ``d_prime``).
    """

    epsilon: float = 0.5
    delta: float = 0.1
    k_rule: str = "sqrt_n"
    k: int | None = None
    dprime_rule: str = "heuristic_logn"
    d_prime: int | None = None
    expansion_c: float | None = None
    expansion_rho: int | None = None
    projection_mode: str = "gaussian"
    seed: int = 0
    c_tilde: float = 1.0
    c_prime: float = 7.0
    bucket_size: int = 8
    tree_epsilon: float | None = None

    def __post_init__(self):
        if self.k_rule not in K_RULES:
            raise ValueError(f"unknown k rule {self.k_rule!r}")
        if self.dprime_rule not in DPRIME_RULES:
            raise ValueError(f"unknown d' rule {self.dprime_rule!r}")
        if self.k_rule == "explicit" and (self.k is None or self.k < 1):
            raise ValueError("explicit k rule needs a positive k")
        if self.dprime_rule == "explicit" and (self.d_prime is None or self.d_prime < 1):
            raise ValueError("explicit d' rule needs a positive d_prime")
        if self.dprime_rule == "expansion" and (self.expansion_c is None or self.expansion_rho is None):
            raise ValueError("expansion d' rule needs expansion_c and expansion_rho")
        if not 0.0 <= self.epsilon < 1.0 or not 0.0 < self.delta < 1.0:
            raise ValueError("need epsilon in [0, 1) and delta in (0, 1)")

    @property
    def search_epsilon(self) -> float:
        return self.epsilon if self.tree_epsilon is None else self.tree_epsilon


def resolve_k(config: AnnConfig, n: int) -> int:
    rule = config.k_rule
    if rule == "explicit":
        k = config.k
    elif rule == "sqrt_n":
        k = math.ceil(math.sqrt(n))
    elif rule == "ln_n":
        k = math.ceil(math.log(n))
    else:
        rho = rho_exponent(n, config.epsilon, config.c_tilde, config.c_prime)
        k = math.ceil(n**rho)
    return int(min(max(k, 1), n))


def resolve_dprime(config: AnnConfig, n: int, k: int) -> int:
    rule = config.dprime_rule
    if rule == "explicit":
        return int(config.d_prime)
    if rule == "heuristic_logn":
        return heuristic_dimension(n)
    if rule == "expansion":
        return target_dimension_expansion(
            config.expansion_c, config.expansion_rho, k, config.epsilon, config.delta
        )
    params = DimensionParams(n=n, k=k, epsilon=config.epsilon, delta=config.delta,
                             c=1.0 + config.epsilon)
    return target_dimension(params)


@dataclass
class AnnIndex:
    original: np.ndarray = field(repr=False)
    map: object = field(repr=False)
    tree: KannTree = field(repr=False)
    epsilon: float
    k: int
    config: AnnConfig
    clamped: bool = False

    @property
    def n(self) -> int:
        return self.original.shape[0]

    @property
    def d_prime(self) -> int:
        return self.map.target_dim

    def candidates(self, q) -> list[Neighbor]:
        """The ``k`` reduced-space candidates for ``q``, in tree order."""
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (self.original.shape[1],):
            raise ValueError(f"query must have shape ({self.original.shape[1]},), got {q.shape}")
        return self.tree.search(project(self.map, q), self.k, self.config.search_epsilon)

    def query(self, q, early_stop_radius: float | None = None) -> Neighbor:
        """Approximate nearest neighbor of ``q`` in original coordinates.

        With ``early_stop_radius`` set, the first candidate (in tree order)
        within that radius is returned instead of the best one; if none
        qualifies the best candidate is returned.
        """
        cand = self.candidates(q)
        idx = np.fromiter((c.index for c in cand), dtype=np.int64, count=len(cand))
        q = np.asarray(q, dtype=np.float64)
        if early_stop_radius is not None:
            for i in idx.tolist():
                dist = float(point_distances(self.original[i:i + 1], q)[0])
                if dist <= early_stop_radius:
                    return Neighbor(i, dist)
        dist = point_distances(self.original[idx], q)
        best = int(np.lexsort((idx, dist))[0])
        return Neighbor(int(idx[best]), float(dist[best]))


def build_index(points, config: AnnConfig | None = None) -> AnnIndex:
    config = config or AnnConfig()
    X = np.ascontiguousarray(points, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 1:
        raise ValueError(f"need at least 2 points of dimension >= 1, got shape {X.shape}")
    n, d = X.shape
    k = resolve_k(config, n)
    d_prime = resolve_dprime(config, n, k)
    mode = config.projection_mode
    clamped = d_prime > d
    if clamped:
        # a square orthonormal map is an isometry, so nothing is lost
        log.warning("resolved d'=%d exceeds d=%d; clamping to an orthonormal %dx%d map",
                    d_prime, d, d, d)
        d_prime, mode = d, "orthonormal"
    pmap = sample_projection(d, d_prime, mode, config.seed)
    tree = KannTree(project(pmap, X), config.bucket_size)
    return AnnIndex(original=X, map=pmap, tree=tree, epsilon=config.epsilon, k=k,
                    config=config, clamped=clamped)


def query(index: AnnIndex, q, early_stop_radius: float | None = None) -> Neighbor:
    return index.query(q, early_stop_radius)
