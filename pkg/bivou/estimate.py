"""
Maximum likelihood over the box J.

The minimization is done in two stages:

  1. Profile search in theta. For fixed theta the likelihood in A is maximized
     by A_hat(theta) = Q(theta) / n, so only a 1-d search remains. A log-spaced
     scan over [a_theta, b_theta] brackets the minimum, then bounded Brent
     (scipy's golden-section/parabolic hybrid) polishes it to theta_tol. Pinned
     or out-of-box nuisance values are replaced by their box projection, in
     which case the profile is only a starting point.
  2. L-BFGS-B refinement over the free coordinates with the analytic gradient,
     started from the stage-1 point.

Pinned parameters (equal bounds) never enter the optimizer.
"""
from __future__ import annotations

import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict
from scipy.optimize import minimize, minimize_scalar

from bivou.core import PARAM_NAMES, BivariateSample, DomainModel, ParamBox, Params
from bivou.errors import BivouError, DomainError, EstimationError
from bivou.likelihood import (
    neg_log_lik_fast,
    neg_log_lik_gradient,
    params_from_A,
    profile_A_hat,
    profile_neg_log_lik,
)
from config import config


class FitOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    theta_tol: float = 1e-8
    scan_points: int = 64
    max_evals: int = 2000
    gtol_per_n: float = 1e-6


class FitResult(DomainModel):
    psi_hat: Params
    microergodic: Tuple[float, float, float]
    nll_at_min: float
    nll_at_start: float
    converged: bool
    n_evals: int
    boundary_hit: List[str]
    pinned: List[str]
    profile_used: bool
    grad_norm: float
    message: str = ""

    @property
    def scenario(self) -> str:
        return scenario_for_pinned(self.pinned)


def microergodic(psi: Params) -> Tuple[float, float, float]:
    """The consistently estimable functionals (theta sigma1^2, theta sigma2^2, rho)."""
    return (psi.theta * psi.sigma1_sq, psi.theta * psi.sigma2_sq, psi.rho)


def scenario_for_pinned(pinned: List[str]) -> str:
    p = set(pinned)
    if p == {"sigma1_sq", "sigma2_sq", "rho"}:
        return "theta_only"
    if p == {"sigma1_sq", "sigma2_sq"}:
        return "theta_rho"
    if not p:
        return "full"
    return "custom"


def box_for_scenario(scenario: str, psi0: Params, base: Optional[ParamBox] = None) -> ParamBox:
    """The estimation box the simulation study uses: variances known in scenario 1."""
    if scenario == "theta_only":
        return ParamBox.pinned(base, sigma1_sq=psi0.sigma1_sq, sigma2_sq=psi0.sigma2_sq, rho=psi0.rho)
    if scenario == "theta_rho":
        return ParamBox.pinned(base, sigma1_sq=psi0.sigma1_sq, sigma2_sq=psi0.sigma2_sq)
    if scenario == "full":
        return base or ParamBox.default()
    raise DomainError(f"unknown scenario {scenario!r}")


class _Objective:
    """l_n restricted to the free coordinates of a box, with an evaluation counter."""

    def __init__(self, sample: BivariateSample, box: ParamBox):
        self.sample = sample
        self.box = box
        self.free = [PARAM_NAMES.index(k) for k in box.free_names()]
        self.base = box.lower().copy()  # pinned coordinates already at their value
        self.n_evals = 0

    def full(self, x: np.ndarray) -> np.ndarray:
        vec = self.base.copy()
        vec[self.free] = x
        return vec

    def value(self, vec: np.ndarray) -> float:
        self.n_evals += 1
        try:
            return neg_log_lik_fast(Params.from_vector(vec), self.sample).total
        except BivouError:
            return math.inf

    def value_and_grad(self, x: np.ndarray) -> Tuple[float, np.ndarray]:
        vec = self.full(x)
        self.n_evals += 1
        try:
            params = Params.from_vector(vec)
            f = neg_log_lik_fast(params, self.sample).total
            g = neg_log_lik_gradient(params, self.sample)[self.free]
        except BivouError:
            return math.inf, np.zeros(len(self.free))
        return f, g


def _stage1_point(theta: float, obj: _Objective) -> Tuple[np.ndarray, bool]:
    """Box-projected profile point at theta and whether the projection was a no-op."""
    s1, s2, rho_hat = params_from_A(profile_A_hat(theta, obj.sample), theta)
    lim = 1.0 - config.RHO_CLIP
    rho = min(max(rho_hat, -lim), lim)
    raw = np.array([s1, s2, rho, theta])
    vec = obj.box.clip(raw)
    vec[3] = theta
    return vec, bool(rho == rho_hat and np.array_equal(vec[:3], raw[:3]))


def _profile_search(obj: _Objective, opts: FitOptions) -> Tuple[np.ndarray, bool]:
    lo, hi = obj.box.theta

    def f(theta: float) -> float:
        try:
            vec, exact = _stage1_point(theta, obj)
            if exact:
                # profile point inside the box: use the closed form
                obj.n_evals += 1
                return profile_neg_log_lik(theta, obj.sample)
        except BivouError:
            obj.n_evals += 1
            return math.inf
        return obj.value(vec)

    grid = np.geomspace(lo, hi, opts.scan_points)
    values = np.array([f(t) for t in grid])
    if not np.any(np.isfinite(values)):
        raise EstimationError("profile likelihood is non-finite over the whole theta range",
                              context={"theta_bounds": [lo, hi], "n": obj.sample.n})
    k = int(np.argmin(values))  # first index: smallest theta on ties
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    best_theta, best_val = float(grid[k]), float(values[k])
    if b > a:
        res = minimize_scalar(f, bounds=(a, b), method="bounded",
                              options={"xatol": opts.theta_tol, "maxiter": 500})
        if np.isfinite(res.fun) and res.fun < best_val:
            best_theta, best_val = float(res.x), float(res.fun)
    return _stage1_point(best_theta, obj)


def _projected_gradient(x: np.ndarray, g: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    pg = g.copy()
    pg[(x <= lo) & (g > 0)] = 0.0
    pg[(x >= hi) & (g < 0)] = 0.0
    return pg


def _boundary_hits(vec: np.ndarray, box: ParamBox) -> List[str]:
    hits = []
    for i, name in enumerate(PARAM_NAMES):
        if box.is_pinned(name):
            continue
        lo, hi = box.bounds(name)
        tol = 1e-9 * (1.0 + max(abs(lo), abs(hi)))
        if vec[i] <= lo + tol:
            hits.append(f"{name}_lower")
        elif vec[i] >= hi - tol:
            hits.append(f"{name}_upper")
    return hits


def fit_mle(sample: BivariateSample, box: Optional[ParamBox] = None,
            options: Optional[FitOptions] = None) -> FitResult:
    box = box or ParamBox.default()
    opts = options or FitOptions()
    n = sample.n
    if n < 2:
        raise DomainError(f"fit_mle needs n >= 2 (got {n}); with one point theta is not identified")

    obj = _Objective(sample, box)

    # -- stage 1: profile in theta ------------------------------------------
    if box.is_pinned("theta"):
        start, profile_used = _stage1_point(box.theta[0], obj)
    else:
        start, profile_used = _profile_search(obj, opts)
    f_start = obj.value(start)
    if not math.isfinite(f_start):
        raise EstimationError("likelihood is non-finite at the profiled start",
                              context={"start": start.tolist()})

    # -- stage 2: local refinement over the free coordinates -----------------
    free = obj.free
    tol = opts.gtol_per_n * n
    best, f_best, message = start, f_start, "all parameters pinned"
    hit_max = False
    if free:
        lo, hi = box.lower()[free], box.upper()[free]
        res = minimize(
            obj.value_and_grad, start[free], jac=True, method="L-BFGS-B",
            bounds=list(zip(lo, hi)),
            options={"maxfun": opts.max_evals, "maxiter": opts.max_evals,
                     "gtol": tol, "ftol": 1e-15},
        )
        message = str(res.message)
        hit_max = res.nfev >= opts.max_evals or res.nit >= opts.max_evals
        if np.isfinite(res.fun) and res.fun <= f_start:
            best, f_best = obj.full(np.clip(res.x, lo, hi)), float(res.fun)

    psi_hat = Params.from_vector(best)
    if free:
        g = neg_log_lik_gradient(psi_hat, sample)[free]
        pg = _projected_gradient(best[free], g, box.lower()[free], box.upper()[free])
        grad_norm = float(np.max(np.abs(pg)))
    else:
        grad_norm = 0.0
    converged = grad_norm <= tol and not hit_max
    hits = _boundary_hits(best, box)

    result = FitResult(
        psi_hat=psi_hat,
        microergodic=microergodic(psi_hat),
        nll_at_min=f_best,
        nll_at_start=f_start,
        converged=converged,
        n_evals=obj.n_evals,
        boundary_hit=hits,
        pinned=box.pinned_names(),
        profile_used=profile_used,
        grad_norm=grad_norm,
        message=message,
    )
    if hits:
        logger.warning(f"fit hit the box boundary: {', '.join(hits)}")
    logger.debug(
        f"fit n={n} theta={psi_hat.theta:.6g} rho={psi_hat.rho:.4f} "
        f"nll={f_best:.6f} evals={obj.n_evals} converged={converged}"
    )
    return result


def fit_summary(result: FitResult) -> Dict:
    return {
        **result.model_dump(),
        "scenario": result.scenario,
    }
