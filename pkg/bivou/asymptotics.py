"""
Closed-form fixed-domain results for the bivariate exponential model.

  * symmetrized entropy between two Gaussian measures on the same grid, in O(n)
    through the tridiagonal inverse of R, with a dense oracle for small n;
  * the equivalence predicate: P_psi1 and P_psi2 are equivalent iff
    sigma_k,1^2 theta_1 = sigma_k,2^2 theta_2 (k = 1, 2) and rho_1 = rho_2,
    otherwise orthogonal;
  * asymptotic covariances of the MLE in the three estimation scenarios;
  * the innovation diagnostics (W, Y, xi) whose joint CLT drives them;
  * standardization of fitted estimates for the simulation tables.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import scipy.linalg
from loguru import logger

from bivou.core import BivariateSample, DomainModel, Params, SamplingGrid, dense_covariance
from bivou.errors import DomainError, NumericError
from bivou.estimate import FitResult
from bivou.likelihood import ar_coefficients, innovations
from config import config

Scenario = Literal["theta_only", "theta_rho", "full"]
SCENARIOS: Tuple[str, ...] = ("theta_only", "theta_rho", "full")

SCENARIO_LABELS: Dict[str, List[str]] = {
    "theta_only": ["theta"],
    "theta_rho": ["theta", "rho"],
    "full": ["sigma1_sq_theta", "sigma2_sq_theta", "rho"],
}


# ============================================================================
# EQUIVALENCE OF GAUSSIAN MEASURES
# ============================================================================

class EntropyReport(DomainModel):
    i_n: float
    n: int
    classification: Literal["equivalent", "orthogonal"]
    condition_residuals: Tuple[float, float, float]
    method: Literal["closed_form", "dense"] = "closed_form"


def _microergodic_pairs(psi1: Params, psi2: Params):
    return (
        (psi1.sigma1_sq * psi1.theta, psi2.sigma1_sq * psi2.theta),
        (psi1.sigma2_sq * psi1.theta, psi2.sigma2_sq * psi2.theta),
        (psi1.rho, psi2.rho),
    )


def condition_residuals(psi1: Params, psi2: Params) -> Tuple[float, float, float]:
    """|a - b| / max(1, |a|, |b|) for (sigma1^2 theta, sigma2^2 theta, rho) of the two sets."""
    r1, r2, r3 = (abs(a - b) / max(1.0, abs(a), abs(b)) for a, b in _microergodic_pairs(psi1, psi2))
    return (r1, r2, r3)


def classify_equivalence(psi1: Params, psi2: Params, tol: Optional[float] = None) -> str:
    """'equivalent' iff every condition residual is <= tol, else 'orthogonal'."""
    tol = config.EQUIVALENCE_TOL if tol is None else tol
    same = all(r <= tol for r in condition_residuals(psi1, psi2))
    return "equivalent" if same else "orthogonal"


def trace_R_ratio(theta_j: float, theta_k: float, grid: SamplingGrid) -> float:
    """tr(R_j R_k^{-1}) in O(n) for exponential correlations with decays theta_j, theta_k."""
    a_j, v_j = ar_coefficients(theta_j, grid.deltas)
    a_k, v_k = ar_coefficients(theta_k, grid.deltas)
    return float(np.sum((a_k - a_j) ** 2 / v_k) + np.sum(v_j / v_k) + 1.0)


def _trace_A_ratio(p: Params, q: Params) -> float:
    """tr(A_p A_q^{-1})."""
    cross = 2.0 * p.rho * q.rho * p.sigma1 * p.sigma2 / (q.sigma1 * q.sigma2)
    return (p.sigma1_sq / q.sigma1_sq - cross + p.sigma2_sq / q.sigma2_sq) / (1.0 - q.rho ** 2)


def symmetrized_entropy(psi1: Params, psi2: Params, grid: SamplingGrid,
                        dense: bool = False, tol: Optional[float] = None) -> EntropyReport:
    """
    Sum of the two Kullback-Leibler divergences between N(0, A1 kron R1) and
    N(0, A2 kron R2). The log-determinants cancel, leaving
    1/2 [tr(A1 A2^-1) tr(R1 R2^-1) + tr(A2 A1^-1) tr(R2 R1^-1)] - 2n.
    """
    n = grid.n
    if n < 2:
        raise DomainError(f"symmetrized entropy needs n >= 2 (got {n})")
    if dense:
        i_n = dense_symmetrized_entropy(psi1, psi2, grid)
    elif psi1 == psi2:
        i_n = 0.0
    else:
        t12 = trace_R_ratio(psi1.theta, psi2.theta, grid)
        t21 = trace_R_ratio(psi2.theta, psi1.theta, grid)
        i_n = 0.5 * (_trace_A_ratio(psi1, psi2) * t12 + _trace_A_ratio(psi2, psi1) * t21) - 2.0 * n
    return EntropyReport(
        i_n=max(float(i_n), 0.0),
        n=n,
        classification=classify_equivalence(psi1, psi2, tol),
        condition_residuals=condition_residuals(psi1, psi2),
        method="dense" if dense else "closed_form",
    )


def dense_symmetrized_entropy(psi1: Params, psi2: Params, grid: SamplingGrid) -> float:
    """KL(1||2) + KL(2||1) from full 2n x 2n covariances: log-determinants and traces."""
    n = grid.n
    if n > config.DENSE_MAX_N:
        raise DomainError(f"dense entropy limited to n <= {config.DENSE_MAX_N} (got {n})")
    s1 = dense_covariance(psi1, grid)
    s2 = dense_covariance(psi2, grid)
    try:
        f1 = scipy.linalg.cho_factor(s1, lower=True)
        f2 = scipy.linalg.cho_factor(s2, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericError("covariance matrix is numerically not positive definite",
                           context={"psi1": psi1.model_dump(), "psi2": psi2.model_dump(), "n": n}) from exc
    logdet1 = 2.0 * float(np.sum(np.log(np.diag(f1[0]))))
    logdet2 = 2.0 * float(np.sum(np.log(np.diag(f2[0]))))
    dim = 2 * n
    kl12 = 0.5 * (np.trace(scipy.linalg.cho_solve(f2, s1)) - dim + logdet2 - logdet1)
    kl21 = 0.5 * (np.trace(scipy.linalg.cho_solve(f1, s2)) - dim + logdet1 - logdet2)
    return float(kl12 + kl21)


# ============================================================================
# ASYMPTOTIC COVARIANCES
# ============================================================================

class AsymCov(DomainModel):
    scenario: Scenario
    matrix: List[List[float]]
    labels: List[str]

    @property
    def array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=float)

    def sd(self) -> np.ndarray:
        return np.sqrt(np.diag(self.array))


def asym_cov(scenario: str, psi0: Params) -> AsymCov:
    """Limiting covariance of sqrt(n) (estimate - truth) for the scenario's estimated coordinates."""
    th, rho = psi0.theta, psi0.rho
    s1, s2 = psi0.sigma1_sq, psi0.sigma2_sq
    one_m = 1.0 - rho * rho
    if scenario == "theta_only":
        m = np.array([[th * th]])
    elif scenario == "theta_rho":
        m = np.array([
            [th * th * (1.0 + rho * rho), th * rho * one_m],
            [th * rho * one_m, one_m * one_m],
        ])
    elif scenario == "full":
        c12 = 2.0 * (th * rho * psi0.sigma1 * psi0.sigma2) ** 2
        m = np.array([
            [2.0 * (th * s1) ** 2, c12, th * rho * s1 * one_m],
            [c12, 2.0 * (th * s2) ** 2, th * rho * s2 * one_m],
            [th * rho * s1 * one_m, th * rho * s2 * one_m, one_m * one_m],
        ])
    else:
        raise DomainError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    return AsymCov(scenario=scenario, matrix=m.tolist(), labels=list(SCENARIO_LABELS[scenario]))


def xi_covariance(rho0: float) -> np.ndarray:
    """Covariance of (W1^2 - 1, W2^2 - 1, Y - E Y) for one standardized innovation pair."""
    if not (math.isfinite(rho0) and -1.0 < rho0 < 1.0):
        raise DomainError(f"rho must satisfy |rho| < 1 (got {rho0})")
    c = 2.0 * rho0 / math.sqrt(1.0 + rho0 * rho0)
    r2 = 2.0 * rho0 * rho0
    return np.array([[2.0, r2, c], [r2, 2.0, c], [c, c, 1.0]])


def theta_xi_variance(psi0: Params) -> float:
    """
    Variance of the theta estimator with known variances and correlation,
    written as the xi quadratic form a' S a theta^2 / (4 (1 - rho^2)^2) with
    a = (1, 1, -2 rho sqrt(1 + rho^2)). Reduces to theta^2.
    """
    rho = psi0.rho
    a = np.array([1.0, 1.0, -2.0 * rho * math.sqrt(1.0 + rho * rho)])
    return float(a @ xi_covariance(rho) @ a) * psi0.theta ** 2 / (4.0 * (1.0 - rho * rho) ** 2)


# ============================================================================
# INNOVATION DIAGNOSTICS
# ============================================================================

@dataclass(frozen=True)
class DiagnosticStats:
    y_values: np.ndarray
    w_values: np.ndarray  # shape (2, n-1)
    xi_values: np.ndarray  # shape (3, n-1)
    sample_moments: Dict[str, object] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, object]:
        return {"n_innovations": int(self.y_values.size), **self.sample_moments}


def compute_diagnostics(sample: BivariateSample, psi0: Params) -> DiagnosticStats:
    """
    Standardized innovations under the true parameters:
    W_k,i = u_k,i / (sigma_k sqrt(v_i)), Y_i = W_1,i W_2,i / sqrt(1 + rho^2),
    xi = (W_1^2 - 1, W_2^2 - 1, Y - rho / sqrt(1 + rho^2)).
    """
    n = sample.n
    if n < 2:
        raise DomainError(f"diagnostics need n >= 2 (got {n})")
    u1, u2, _, v = innovations(psi0.theta, sample)
    sv = np.sqrt(v)
    w1 = u1 / (psi0.sigma1 * sv)
    w2 = u2 / (psi0.sigma2 * sv)
    scale = math.sqrt(1.0 + psi0.rho ** 2)
    y = u1 * u2 / (psi0.sigma1 * psi0.sigma2 * scale * v)
    xi = np.vstack([w1 * w1 - 1.0, w2 * w2 - 1.0, y - psi0.rho / scale])

    m = y.size
    var_y = float(np.var(y, ddof=1)) if m > 1 else 0.0
    dev2 = (y - y.mean()) ** 2
    moments = {
        "mean_y": float(y.mean()),
        "var_y": var_y,
        "se_mean_y": math.sqrt(var_y / m),
        "se_var_y": float(np.std(dev2, ddof=1) / math.sqrt(m)) if m > 1 else 0.0,
        "expected_mean_y": psi0.rho / scale,
        "mean_w": [float(w1.mean()), float(w2.mean())],
        "var_w": [float(np.var(w1, ddof=1)), float(np.var(w2, ddof=1))] if m > 1 else [0.0, 0.0],
        "mean_xi": xi.mean(axis=1).tolist(),
        "cov_xi": np.atleast_2d(np.cov(xi)).tolist() if m > 1 else np.zeros((3, 3)).tolist(),
    }
    logger.debug(f"diagnostics n={n}: mean(Y)={moments['mean_y']:.4f} var(Y)={var_y:.4f}")
    return DiagnosticStats(y_values=y, w_values=np.vstack([w1, w2]), xi_values=xi,
                           sample_moments=moments)


# ============================================================================
# STANDARDIZATION
# ============================================================================

def scenario_estimates(fit: FitResult, scenario: str) -> np.ndarray:
    """The raw estimates a scenario is judged on, in SCENARIO_LABELS order."""
    p = fit.psi_hat
    if scenario == "theta_only":
        return np.array([p.theta])
    if scenario == "theta_rho":
        return np.array([p.theta, p.rho])
    if scenario == "full":
        return np.array(fit.microergodic)
    raise DomainError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")


def scenario_truth(psi0: Params, scenario: str) -> np.ndarray:
    if scenario == "theta_only":
        return np.array([psi0.theta])
    if scenario == "theta_rho":
        return np.array([psi0.theta, psi0.rho])
    if scenario == "full":
        return np.array([psi0.theta * psi0.sigma1_sq, psi0.theta * psi0.sigma2_sq, psi0.rho])
    raise DomainError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")


def standardize(fit: FitResult, psi0: Params, scenario: str, n: int) -> np.ndarray:
    """sqrt(n) (estimate - truth) / sd, each coordinate approximately N(0, 1) for large n."""
    if scenario not in SCENARIOS:
        raise DomainError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    if fit.scenario != scenario:
        raise DomainError(
            f"fit was produced with pinned {fit.pinned}, which is scenario {fit.scenario!r}, not {scenario!r}",
            context={"pinned": fit.pinned, "scenario": scenario},
        )
    if n < 1:
        raise DomainError(f"n must be >= 1 (got {n})")
    sd = asym_cov(scenario, psi0).sd()
    return math.sqrt(n) * (scenario_estimates(fit, scenario) - scenario_truth(psi0, scenario)) / sd
