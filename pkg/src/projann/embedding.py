"""Random linear maps and the dimension formulas that size them.

A :class:`ProjectionMap` sends ``R^d -> R^d'`` through ``v -> scale * A^T v``
with ``scale = sqrt(d / d')``.  The remaining functions evaluate target
dimensions and the scalar inequalities behind the locality guarantee so
they can be checked numerically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MODES = ("gaussian", "orthonormal")


class InvalidDimensionError(ValueError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator used for every random draw in the package.

    Philox is counter based, so streams are reproducible across platforms.
    """
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def gram_schmidt(A, tol=1e-10):
    """Orthonormalize the columns of ``A`` (modified Gram-Schmidt, two passes).

    Parameters
    ----------
    A : ndarray
        (d x m) matrix with m <= d.
    tol : float
        A column whose residual norm falls below ``tol`` times its original
        norm is treated as linearly dependent.

    Returns
    -------
    Q : ndarray
        (d x m) matrix with orthonormal columns spanning the columns of A.

    Raises
    ------
    numpy.linalg.LinAlgError
        If the columns are (numerically) rank deficient.
    """
    Q = np.array(A, dtype=np.float64, copy=True)
    d, m = Q.shape
    if m > d:
        raise InvalidDimensionError(f"cannot orthonormalize {m} columns in dimension {d}")
    for j in range(m):
        v = Q[:, j]
        norm0 = np.linalg.norm(v)
        # second pass restores orthogonality lost to rounding
        for _ in range(2):
            for i in range(j):
                v -= np.dot(Q[:, i], v) * Q[:, i]
        norm = np.linalg.norm(v)
        if norm0 == 0.0 or norm <= tol * norm0:
            raise np.linalg.LinAlgError(f"column {j} is linearly dependent")
        Q[:, j] = v / norm
    return Q


@dataclass(frozen=True)
class ProjectionMap:
    """Linear map ``p -> scale * A^T p`` from dimension ``source_dim`` to ``target_dim``.

    ``matrix`` holds the sampled ``d x d'`` matrix: raw N(0,1) draws in
    gaussian mode, orthonormal columns in orthonormal mode.  Projection uses
    :attr:`normalized`, the version of the matrix with ``E||A^T p||^2 =
    (d'/d)||p||^2``, so that together with ``scale`` the map preserves
    squared distances in expectation in both modes.
    """

    source_dim: int
    target_dim: int
    matrix: np.ndarray = field(repr=False)
    scale: float
    mode: str
    seed: int

    @property
    def normalized(self) -> np.ndarray:
        if self.mode == "gaussian":
            return self.matrix / math.sqrt(self.source_dim)
        return self.matrix

    def __call__(self, points):
        return project(self, points)


def sample_projection(d: int, d_prime: int, mode: str = "gaussian", seed: int = 0) -> ProjectionMap:
    if d < 1 or d_prime < 1 or d_prime > d:
        raise InvalidDimensionError(f"need 1 <= d' <= d, got d={d}, d'={d_prime}")
    if mode not in MODES:
        raise ValueError(f"unknown projection mode {mode!r}")
    s = int(seed)
    while True:
        G = make_rng(s).standard_normal((d, d_prime))
        if mode == "gaussian":
            A = G
            break
        try:
            A = gram_schmidt(G)
            break
        except np.linalg.LinAlgError:
            s += 1
    A.setflags(write=False)
    return ProjectionMap(
        source_dim=d,
        target_dim=d_prime,
        matrix=A,
        scale=math.sqrt(d / d_prime),
        mode=mode,
        seed=int(seed),
    )


def project(pmap: ProjectionMap, points):
    """Map a single point (shape ``(d,)``) or a point set (shape ``(n, d)``)."""
    P = np.asarray(points, dtype=np.float64)
    if P.shape[-1] != pmap.source_dim or P.ndim not in (1, 2):
        raise InvalidDimensionError(
            f"expected points of dimension {pmap.source_dim}, got shape {P.shape}"
        )
    return pmap.scale * (P @ pmap.normalized)


@dataclass(frozen=True)
class DimensionParams:
    n: int
    k: int
    epsilon: float
    delta: float
    c: float = 1.0

    def __post_init__(self):
        if self.n < 1 or not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got n={self.n}, k={self.k}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.c < 1.0:
            raise ValueError(f"c must be >= 1, got {self.c}")

    @property
    def beta(self) -> float:
        return self.c * (1.0 + self.epsilon / 2.0)

    @property
    def gamma(self) -> float:
        return self.c * (1.0 + self.epsilon)


def target_dimension(params: DimensionParams) -> int:
    """Smallest d' that keeps fewer than ``k`` far points from projecting close.

    Returns ``ceil(2 ln(2n/(delta k)) / (b^2/g^2 - 1 - 2 ln(b/g)))`` with
    ``b = c(1 + eps/2)`` and ``g = c(1 + eps)``.
    """
    ratio = params.beta / params.gamma
    denom = ratio * ratio - 1.0 - 2.0 * math.log(ratio)
    if not denom > 0.0:
        raise ArithmeticError(f"non-positive denominator {denom}")
    numer = 2.0 * math.log(2.0 * params.n / (params.delta * params.k))
    return max(1, math.ceil(numer / denom))


def target_dimension_expansion(c_exp: float, rho_exp: int, k: int, epsilon: float, delta: float) -> int:
    """Target dimension for point sets with bounded expansion rate ``(rho_exp, c_exp)``."""
    if c_exp <= 1.0:
        raise ValueError(f"expansion constant must exceed 1, got {c_exp}")
    if rho_exp < 1 or k < 1:
        raise ValueError("rho_exp and k must be positive")
    if not 0.0 < epsilon < 1.0 or not 0.0 < delta <= 1.0:
        raise ValueError("need epsilon in (0, 1) and delta in (0, 1]")
    return math.ceil(40.0 * math.log(c_exp + 2.0 * rho_exp / (k * delta)) / epsilon**2)


def heuristic_dimension(n: int) -> int:
    """``ceil(ln n / ln ln n)``, the reduced dimension used in the experiments."""
    if n < 16:
        raise ValueError(f"heuristic dimension needs n >= 16, got {n}")
    ln_n = math.log(n)
    return max(1, math.ceil(ln_n / math.log(ln_n)))


def tail_bound(beta: float, d_prime: int) -> float:
    """Upper bound on ``Pr[||Ap||^2 <= beta^2 d'/d]`` (beta < 1) or ``>=`` (beta > 1)."""
    if beta <= 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    return math.exp(0.5 * d_prime * (1.0 - beta * beta + 2.0 * math.log(beta)))


def lemma_gap_i(i: int, epsilon: float) -> float:
    """Margin of the scale-``2^i`` inequality; positive for all i >= 0, eps in (0,1)."""
    r = (1.0 + epsilon / 2.0) / (2.0**i * (1.0 + epsilon))
    lhs = r * r - 2.0 * math.log(r) - 1.0
    return lhs - 0.05 * (i + 1) * epsilon * epsilon


def lemma_gap_x(x: float) -> float:
    """``F(1+x) - F((1+x)/(1+2x))`` with ``F(t) = t^2 - 2 ln t - 1``.

    Both terms vanish like ``2x^2`` as x -> 0 while their difference is
    about ``(20/3) x^3``, so the direct form cancels catastrophically.  The
    expression below is algebraically identical and cancellation free.
    """
    if x <= 0.0:
        raise ValueError(f"x must be positive, got {x}")
    one2x = 1.0 + 2.0 * x
    squares = x * x * (4.0 * x + 4.0 * x * x) / (one2x * one2x)
    # 2 * (x + x/(1+2x) - log1p(2x)); series ~ (8/3) x^3 for small x
    if x < 1e-3:
        y = 2.0 * x
        # x + x/(1+2x) - log1p(2x) = sum_{m>=3} (-1)^m (y^m)(1/2 - 1/m)
        tail = 0.0
        term = y * y
        for m in range(3, 12):
            term *= -y
            tail -= term * (0.5 - 1.0 / m)
        logs = 2.0 * tail
    else:
        logs = 2.0 * (x + x / one2x - math.log1p(2.0 * x))
    return squares + logs
