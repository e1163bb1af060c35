"""
Exact draws of (Z1, Z2) on a grid.

simulate_dense is the reference path: Cholesky of A kron R, O(n^3).
simulate_recursive exploits the Markov property of both components: given the
past, z_k,i has mean e^{-theta Delta_i} z_k,i-1 and variance
sigma_k^2 (1 - e^{-2 theta Delta_i}), and the innovation pair is correlated
with coefficient rho. The first pair is drawn from N(0, A).

Random streams come from a Philox (counter-based) generator keyed by
SeedSequence(seed, spawn_key=stream); a Monte Carlo replication r uses its own
stream so results do not depend on how replications are scheduled.
"""
from __future__ import annotations

import math
from typing import Literal, Tuple

import numpy as np
import scipy.linalg
from loguru import logger
from pydantic import ConfigDict, field_validator

from bivou.core import BivariateSample, DomainModel, Params, SamplingGrid, dense_covariance
from bivou.errors import DomainError, NumericError
from bivou.likelihood import ar_coefficients
from config import config

SEED_MAX = 2 ** 64


def make_rng(seed: int, stream: Tuple[int, ...] = ()) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(stream))))


class SimConfig(DomainModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    params: Params
    grid: SamplingGrid
    seed: int
    method: Literal["dense", "recursive"] = "recursive"
    stream: Tuple[int, ...] = ()

    @field_validator("seed")
    @classmethod
    def _seed_range(cls, v: int) -> int:
        if not 0 <= v < SEED_MAX:
            raise ValueError(f"seed must be a 64-bit unsigned integer (got {v})")
        return v

    def rng(self) -> np.random.Generator:
        return make_rng(self.seed, self.stream)


def simulate(cfg: SimConfig) -> BivariateSample:
    return simulate_dense(cfg) if cfg.method == "dense" else simulate_recursive(cfg)


def simulate_dense(cfg: SimConfig) -> BivariateSample:
    n = cfg.grid.n
    if n > config.DENSE_MAX_N:
        raise DomainError(f"dense simulation limited to n <= {config.DENSE_MAX_N} (got {n})")
    sigma = dense_covariance(cfg.params, cfg.grid)
    try:
        L = scipy.linalg.cholesky(sigma, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericError("Cholesky factorization failed",
                           context={"params": cfg.params.model_dump(), "n": n}) from exc
    z = L @ cfg.rng().standard_normal(2 * n)
    return BivariateSample(z[:n], z[n:], cfg.grid)


def correlated_pairs(rng: np.random.Generator, n: int, rho: float) -> Tuple[np.ndarray, np.ndarray]:
    """n i.i.d. standard normal pairs with correlation rho."""
    eps = rng.standard_normal((n, 2))
    e1 = eps[:, 0]
    e2 = rho * e1 + math.sqrt(1.0 - rho * rho) * eps[:, 1]
    return e1, e2


def simulate_recursive(cfg: SimConfig) -> BivariateSample:
    n = cfg.grid.n
    if n < 1:
        raise DomainError("simulation needs at least one grid point")
    p = cfg.params
    e1, e2 = correlated_pairs(cfg.rng(), n, p.rho)
    a, v = ar_coefficients(p.theta, cfg.grid.deltas)
    sd = np.sqrt(v)
    s1, s2 = p.sigma1, p.sigma2

    z1 = np.empty(n)
    z2 = np.empty(n)
    z1[0] = s1 * e1[0]
    z2[0] = s2 * e2[0]
    for i in range(1, n):
        z1[i] = a[i - 1] * z1[i - 1] + s1 * sd[i - 1] * e1[i]
        z2[i] = a[i - 1] * z2[i - 1] + s2 * sd[i - 1] * e2[i]
    logger.debug(f"simulated n={n} recursively (seed={cfg.seed}, stream={cfg.stream})")
    return BivariateSample(z1, z2, cfg.grid)


def recursive_covariance(params: Params, grid: SamplingGrid) -> np.ndarray:
    """
    Covariance of the recursive construction obtained by propagating the AR(1)
    map z_i = a_i z_{i-1} + b_i eps_i on second moments. Agrees with A kron R
    to rounding; it exists to check the recursion algebraically.
    """
    n = grid.n
    if n < 1:
        raise DomainError("empty grid")
    a, v = ar_coefficients(params.theta, grid.deltas)
    # Linear map from stacked innovations (e1, e2) to stacked z.
    M = np.zeros((n, n))
    M[0, 0] = 1.0
    for i in range(1, n):
        M[i, :] = a[i - 1] * M[i - 1, :]
        M[i, i] = math.sqrt(v[i - 1])
    innovation_cov = np.array([[1.0, params.rho], [params.rho, 1.0]])
    scale = np.diag([params.sigma1, params.sigma2])
    block = scale @ innovation_cov @ scale
    return np.kron(block, M @ M.T)
