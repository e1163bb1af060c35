"""
Shared statistics helpers for the Monte Carlo experiments.

Quantiles use the inverted-CDF (type 1) definition: the smallest order
statistic whose empirical CDF reaches p. With m = 1000 replications the choice
of estimator moves a tail quantile by less than 0.01, far below the Monte Carlo
noise we compare against, but type 1 never interpolates so merged batches give
exactly the same answer as a single batch.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Sequence

import numpy as np
from scipy import stats

DEFAULT_PROBS = (0.05, 0.25, 0.5, 0.75, 0.95)

# The N(0, 1) row printed under every simulation table, to four decimals.
N01_REFERENCE_ROW = (-1.6448, -0.6744, 0.0, 0.6744, 1.6448)

# Level for the loose normality screen on standardized statistics.
NORMALITY_ALPHA = 0.001


def empirical_quantiles(values: Sequence[float], probs: Sequence[float] = DEFAULT_PROBS) -> List[float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return [math.nan] * len(probs)
    return np.quantile(arr, probs, method="inverted_cdf").tolist()


def normal_quantiles(probs: Sequence[float] = DEFAULT_PROBS) -> List[float]:
    return stats.norm.ppf(np.asarray(probs, dtype=float)).tolist()


def sample_variance(values: Sequence[float]) -> float:
    """Unbiased variance; 0 for a single value."""
    arr = np.asarray(values, dtype=float)
    return float(np.var(arr, ddof=1)) if arr.size > 1 else 0.0


def median_abs_error(values: Sequence[float], truth: float) -> float:
    arr = np.asarray(values, dtype=float)
    return float(np.median(np.abs(arr - truth))) if arr.size else math.nan


def summarize_values(values: Sequence[float]) -> Dict[str, float]:
    """mean/median/sd/min/max/n of any numeric metric."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return {k: 0.0 for k in ("n", "mean", "median", "sd", "min", "max")}
    return {
        "n": float(arr.size),
        "mean": float(arr.mean()),
        "median": float(np.median(arr)),
        "sd": math.sqrt(sample_variance(arr)),
        "min": float(arr.min()),
        "max": float(arr.max()),
    }


@dataclass
class NormalityScreen:
    """Anderson-Darling goodness of fit against a normal with estimated location/scale."""
    statistic: float
    pvalue: float
    n: int
    alpha: float = NORMALITY_ALPHA

    @property
    def passed(self) -> bool:
        return self.pvalue > self.alpha

    def as_dict(self) -> Dict:
        return {**asdict(self), "passed": self.passed}

    def pretty(self) -> str:
        """e.g. 'AD=0.412 p=0.338 (n=1000) pass'"""
        return f"AD={self.statistic:.3f} p={self.pvalue:.3f} (n={self.n}) {'pass' if self.passed else 'FAIL'}"


def normality_screen(values: Sequence[float], seed: int = 0, n_mc_samples: int = 4999,
                     alpha: float = NORMALITY_ALPHA) -> NormalityScreen:
    arr = np.asarray(values, dtype=float)
    res = stats.goodness_of_fit(stats.norm, arr, statistic="ad", n_mc_samples=n_mc_samples,
                                random_state=np.random.default_rng(seed))
    return NormalityScreen(statistic=float(res.statistic), pvalue=float(res.pvalue),
                           n=int(arr.size), alpha=alpha)


def max_abs_deviation(a: Sequence[float], b: Sequence[float]) -> float:
    return float(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))))
