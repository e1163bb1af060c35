"""
Negative log-likelihood l_n(psi) = -2 log f_n(psi) of the stacked sample.

Two independent evaluation paths:

  * neg_log_lik_fast  -- O(n). Both components are Ornstein-Uhlenbeck, so R^{-1}
    is tridiagonal and Z_k^T R^{-1} Z_l collapses into a sum over one-step
    innovations z_{k,i} - e^{-theta Delta_i} z_{k,i-1} weighted by
    1 / (1 - e^{-2 theta Delta_i}). log|A kron R| = n log|A| + 2 log|R| with
    log|R| = sum_i log(1 - e^{-2 theta Delta_i}).
  * neg_log_lik_dense -- O(n^3). Cholesky of the full 2n x 2n matrix. Shares no
    code with the fast path and is only meant as an oracle.

The constant is 2n log(2 pi): the density of a 2n-variate normal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg

from bivou.core import BivariateSample, Params, dense_covariance
from bivou.errors import DomainError, EstimationError, NumericError
from config import config

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class LikelihoodTerms:
    log_det: float
    quad_form: float
    constant: float

    @property
    def total(self) -> float:
        return self.log_det + self.quad_form + self.constant

    def as_dict(self):
        return {"log_det": self.log_det, "quad_form": self.quad_form,
                "constant": self.constant, "total": self.total}


# ============================================================================
# MARKOV PIECES
# ============================================================================

def ar_coefficients(theta: float, deltas: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    (e^{-theta Delta_i}, 1 - e^{-2 theta Delta_i}) for every spacing; the second
    comes from expm1 so tiny theta*Delta keeps full precision.
    """
    a = np.exp(-theta * deltas)
    v = -np.expm1(-2.0 * theta * deltas)
    if v.size and not np.all(v > 0.0):
        i = int(np.argmin(v))
        raise NumericError(
            "innovation variance 1 - exp(-2 theta Delta) underflowed to zero",
            context={"theta": theta, "index": i + 2, "delta": float(deltas[i])},
        )
    return a, v


def innovations(theta: float, sample: BivariateSample):
    """One-step residuals u_k,i = z_k,i - e^{-theta Delta_i} z_k,i-1 (i = 2..n) and v_i."""
    a, v = ar_coefficients(theta, sample.grid.deltas)
    u1 = sample.z1[1:] - a * sample.z1[:-1]
    u2 = sample.z2[1:] - a * sample.z2[:-1]
    return u1, u2, a, v


def cross_quadratic_forms(theta: float, sample: BivariateSample) -> np.ndarray:
    """The symmetric 2x2 matrix Q with Q_kl = Z_k^T R(theta)^{-1} Z_l, in O(n)."""
    if sample.n < 1:
        raise DomainError("likelihood needs at least one observation")
    u1, u2, _, v = innovations(theta, sample)
    z11, z21 = sample.z1[0], sample.z2[0]
    q11 = z11 * z11 + np.sum(u1 * u1 / v)
    q22 = z21 * z21 + np.sum(u2 * u2 / v)
    q12 = z11 * z21 + np.sum(u1 * u2 / v)
    return np.array([[q11, q12], [q12, q22]])


def log_det_R(theta: float, sample: BivariateSample) -> float:
    _, v = ar_coefficients(theta, sample.grid.deltas)
    return float(np.sum(np.log(v)))


# ============================================================================
# LIKELIHOOD
# ============================================================================

def _quad_from_Q(params: Params, Q: np.ndarray) -> float:
    s1, s2, rho = params.sigma1_sq, params.sigma2_sq, params.rho
    inner = Q[0, 0] / s1 + Q[1, 1] / s2 - 2.0 * rho * Q[0, 1] / (params.sigma1 * params.sigma2)
    return float(inner / (1.0 - rho * rho))


def neg_log_lik_fast(params: Params, sample: BivariateSample) -> LikelihoodTerms:
    n = sample.n
    Q = cross_quadratic_forms(params.theta, sample)
    log_det = (
        n * (math.log(params.sigma1_sq) + math.log(params.sigma2_sq) + math.log1p(-params.rho ** 2))
        + 2.0 * log_det_R(params.theta, sample)
    )
    return LikelihoodTerms(log_det=log_det, quad_form=_quad_from_Q(params, Q),
                           constant=2.0 * n * LOG_2PI)


def neg_log_lik_dense(params: Params, sample: BivariateSample) -> LikelihoodTerms:
    n = sample.n
    if n < 1:
        raise DomainError("likelihood needs at least one observation")
    if n > config.DENSE_MAX_N:
        raise DomainError(f"dense likelihood limited to n <= {config.DENSE_MAX_N} (got {n})")
    sigma = dense_covariance(params, sample.grid)
    try:
        factor = scipy.linalg.cho_factor(sigma, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericError("covariance matrix is numerically not positive definite",
                           context={"params": params.model_dump(), "n": n}) from exc
    z = sample.stacked()
    log_det = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    quad = float(z @ scipy.linalg.cho_solve(factor, z))
    return LikelihoodTerms(log_det=log_det, quad_form=quad, constant=2.0 * n * LOG_2PI)


def neg_log_lik_gradient(params: Params, sample: BivariateSample) -> np.ndarray:
    """Analytic gradient of l_n in PARAM_NAMES order (sigma1_sq, sigma2_sq, rho, theta)."""
    n = sample.n
    if n < 1:
        raise DomainError("likelihood needs at least one observation")
    s1, s2, rho, theta = params.sigma1_sq, params.sigma2_sq, params.rho, params.theta
    sd = params.sigma1 * params.sigma2
    one_m = 1.0 - rho * rho

    u1, u2, a, v = innovations(theta, sample)
    z11, z21 = sample.z1[0], sample.z2[0]
    q11 = z11 * z11 + np.sum(u1 * u1 / v)
    q22 = z21 * z21 + np.sum(u2 * u2 / v)
    q12 = z11 * z21 + np.sum(u1 * u2 / v)

    # d/dtheta of u_k u_l / v with da/dtheta = -Delta a, dv/dtheta = 2 Delta a^2
    d = sample.grid.deltas
    p1, p2 = sample.z1[:-1], sample.z2[:-1]
    w = d * a / v
    w2 = 2.0 * d * a * a / (v * v)
    dq11 = np.sum(w * 2.0 * p1 * u1 - w2 * u1 * u1)
    dq22 = np.sum(w * 2.0 * p2 * u2 - w2 * u2 * u2)
    dq12 = np.sum(w * (p1 * u2 + u1 * p2) - w2 * u1 * u2)

    inner = q11 / s1 + q22 / s2 - 2.0 * rho * q12 / sd

    g_s1 = n / s1 + (-q11 / (s1 * s1) + rho * q12 / (s1 * sd)) / one_m
    g_s2 = n / s2 + (-q22 / (s2 * s2) + rho * q12 / (s2 * sd)) / one_m
    g_rho = -2.0 * n * rho / one_m + 2.0 * rho * inner / (one_m * one_m) - 2.0 * q12 / (sd * one_m)
    g_theta = (
        2.0 * np.sum(2.0 * d * a * a / v)
        + (dq11 / s1 + dq22 / s2 - 2.0 * rho * dq12 / sd) / one_m
    )
    return np.array([g_s1, g_s2, g_rho, g_theta], dtype=float)


# ============================================================================
# PROFILING OVER A
# ============================================================================

def profile_A_hat(theta: float, sample: BivariateSample) -> np.ndarray:
    """
    Maximizer of the likelihood in A at fixed theta: A_hat = Q(theta) / n.
    Rank-deficient A_hat (perfectly correlated components) is returned as is;
    the estimator clips the implied rho and reports the boundary.
    """
    n = sample.n
    if n < 2:
        raise DomainError(f"profiling needs n >= 2 (got {n})")
    A = cross_quadratic_forms(theta, sample) / n
    if not (A[0, 0] > 0.0 and A[1, 1] > 0.0):
        raise EstimationError("profiled variances are not positive (degenerate data)",
                              context={"theta": theta, "A_hat": A.tolist()})
    r = A[0, 1] / math.sqrt(A[0, 0] * A[1, 1])
    if abs(r) > 1.0 + 1e-8:
        raise EstimationError("profiled covariance is not positive semi-definite",
                              context={"theta": theta, "A_hat": A.tolist()})
    return A


def params_from_A(A: np.ndarray, theta: float) -> Tuple[float, float, float]:
    """(sigma1^2, sigma2^2, rho) implied by a 2x2 covariance, rho unclipped."""
    return float(A[0, 0]), float(A[1, 1]), float(A[0, 1] / math.sqrt(A[0, 0] * A[1, 1]))


def profile_neg_log_lik(theta: float, sample: BivariateSample) -> float:
    """l_n(A_hat(theta), theta) in closed form: n log|A_hat| + 2 log|R| + 2n + 2n log 2 pi."""
    n = sample.n
    A = profile_A_hat(theta, sample)
    det = A[0, 0] * A[1, 1] - A[0, 1] ** 2
    if det <= 0.0:
        return -math.inf
    return n * math.log(det) + 2.0 * log_det_R(theta, sample) + 2.0 * n + 2.0 * n * LOG_2PI
