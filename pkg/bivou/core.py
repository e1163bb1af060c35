"""
Domain types and covariance construction for the bivariate exponential model.

The process Z = (Z1, Z2) on [0, 1] has separable covariance

    Cov(Z_i(s), Z_j(t)) = sigma_i sigma_j (rho + (1 - rho) 1{i=j}) exp(-theta |s - t|)

so on a grid s_1 < ... < s_n the stacked vector (Z1(s)^T, Z2(s)^T)^T has
covariance A kron R with A the 2x2 colocated covariance and R the exponential
correlation matrix. Every other module builds on the types defined here.

Parameter-carrying types are frozen pydantic models (they travel as JSON
through the CLI and the Monte Carlo summaries); grid and sample types are
frozen dataclasses over read-only numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from bivou.errors import DomainError
from config import config

# Canonical ordering for vectors, gradients and box bounds.
PARAM_NAMES: Tuple[str, ...] = ("sigma1_sq", "sigma2_sq", "rho", "theta")

# Exponential model: correlation e^{-theta x} drops to ~0.05 at x = 3 / theta.
PRACTICAL_RANGE_FACTOR = 3.0


class DomainModel(BaseModel):
    """Frozen pydantic model whose validation failures surface as DomainError."""

    model_config = ConfigDict(frozen=True)

    def __init__(self, **data):
        try:
            super().__init__(**data)
        except ValidationError as exc:
            first = exc.errors()[0]
            where = ".".join(str(p) for p in first.get("loc", ()))
            msg = str(first.get("msg", "invalid value")).removeprefix("Value error, ")
            raise DomainError(
                f"invalid {type(self).__name__}: {msg}" + (f" [{where}]" if where else ""),
                context={"input": {k: _jsonable(v) for k, v in data.items()}},
            ) from None


def _jsonable(v):
    if isinstance(v, (int, float, str, bool)) or v is None:
        return v
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return repr(v)


# ============================================================================
# PARAMETERS
# ============================================================================

class Params(DomainModel):
    """Covariance parameters psi = (sigma1^2, sigma2^2, rho, theta)."""

    sigma1_sq: float
    sigma2_sq: float
    rho: float
    theta: float

    @field_validator("sigma1_sq", "sigma2_sq", "theta")
    @classmethod
    def _positive(cls, v: float, info) -> float:
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"{info.field_name} must be > 0 and finite (got {v})")
        return float(v)

    @field_validator("rho")
    @classmethod
    def _correlation(cls, v: float) -> float:
        if not (math.isfinite(v) and -1.0 < v < 1.0):
            raise ValueError(f"rho must satisfy |rho| < 1 (got {v})")
        return float(v)

    @classmethod
    def of(cls, sigma1_sq: float, sigma2_sq: float, rho: float, theta: float) -> "Params":
        return cls(sigma1_sq=sigma1_sq, sigma2_sq=sigma2_sq, rho=rho, theta=theta)

    @classmethod
    def from_vector(cls, vec: Sequence[float]) -> "Params":
        return cls(**dict(zip(PARAM_NAMES, (float(x) for x in vec))))

    @classmethod
    def from_practical_range(cls, sigma1_sq: float, sigma2_sq: float, rho: float,
                             practical_range: float) -> "Params":
        if not (math.isfinite(practical_range) and practical_range > 0):
            raise DomainError(f"practical range must be > 0 (got {practical_range})")
        return cls.of(sigma1_sq, sigma2_sq, rho, PRACTICAL_RANGE_FACTOR / practical_range)

    def to_vector(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in PARAM_NAMES], dtype=float)

    @property
    def sigma1(self) -> float:
        return math.sqrt(self.sigma1_sq)

    @property
    def sigma2(self) -> float:
        return math.sqrt(self.sigma2_sq)

    @property
    def A(self) -> np.ndarray:
        """Colocated 2x2 covariance matrix."""
        c = self.sigma1 * self.sigma2 * self.rho
        return np.array([[self.sigma1_sq, c], [c, self.sigma2_sq]])

    @property
    def practical_range(self) -> float:
        return PRACTICAL_RANGE_FACTOR / self.theta


class ParamBox(DomainModel):
    """
    The compact estimation set J. Each entry is a (lower, upper) pair; equal
    bounds pin the parameter to a known value.
    """

    sigma1_sq: Tuple[float, float]
    sigma2_sq: Tuple[float, float]
    rho: Tuple[float, float]
    theta: Tuple[float, float]

    @model_validator(mode="after")
    def _check_bounds(self) -> "ParamBox":
        for name in ("sigma1_sq", "sigma2_sq", "theta"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi < math.inf):
                raise ValueError(f"{name} bounds must satisfy 0 < lower <= upper < inf (got {lo}, {hi})")
        lo, hi = self.rho
        if not (-1 < lo <= hi < 1):
            raise ValueError(f"rho bounds must satisfy -1 < lower <= upper < 1 (got {lo}, {hi})")
        return self

    @classmethod
    def default(cls) -> "ParamBox":
        return cls(sigma1_sq=config.SIGMA_SQ_BOUNDS, sigma2_sq=config.SIGMA_SQ_BOUNDS,
                   rho=config.RHO_BOUNDS, theta=config.THETA_BOUNDS)

    @classmethod
    def pinned(cls, base: Optional["ParamBox"] = None, **values: float) -> "ParamBox":
        """`base` (default box) with the named parameters pinned to `values`."""
        unknown = set(values) - set(PARAM_NAMES)
        if unknown:
            raise DomainError(f"unknown parameter(s) to pin: {sorted(unknown)}")
        data = (base or cls.default()).model_dump()
        for name, v in values.items():
            data[name] = (float(v), float(v))
        return cls(**data)

    def bounds(self, name: str) -> Tuple[float, float]:
        return getattr(self, name)

    def is_pinned(self, name: str) -> bool:
        lo, hi = self.bounds(name)
        return lo == hi

    def pinned_names(self) -> List[str]:
        return [k for k in PARAM_NAMES if self.is_pinned(k)]

    def free_names(self) -> List[str]:
        return [k for k in PARAM_NAMES if not self.is_pinned(k)]

    def lower(self) -> np.ndarray:
        return np.array([self.bounds(k)[0] for k in PARAM_NAMES])

    def upper(self) -> np.ndarray:
        return np.array([self.bounds(k)[1] for k in PARAM_NAMES])

    def clip(self, vec: Sequence[float]) -> np.ndarray:
        return np.clip(np.asarray(vec, dtype=float), self.lower(), self.upper())

    def contains(self, params: Params) -> bool:
        v = params.to_vector()
        return bool(np.all(v >= self.lower()) and np.all(v <= self.upper()))


# ============================================================================
# GRID AND SAMPLE
# ============================================================================

def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float).reshape(-1)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SamplingGrid:
    """Sorted observation points in [0, 1] with their cached spacings."""

    points: np.ndarray
    deltas: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = _frozen(self.points)
        if not np.all(np.isfinite(pts)):
            raise DomainError("grid points must be finite")
        if pts.size and (pts[0] < 0.0 or pts[-1] > 1.0):
            raise DomainError("grid points must lie in [0, 1]",
                              context={"min": float(pts.min()), "max": float(pts.max())})
        gaps = np.diff(pts)
        if gaps.size and gaps.min() < config.MIN_GRID_GAP:
            i = int(np.argmin(gaps))
            raise DomainError(
                f"grid points must be strictly increasing with gaps >= {config.MIN_GRID_GAP}",
                context={"index": i + 1, "gap": float(gaps[i])},
            )
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "deltas", _frozen(gaps))

    @property
    def n(self) -> int:
        return int(self.points.size)

    @classmethod
    def from_points(cls, points: Iterable[float]) -> "SamplingGrid":
        return cls(np.asarray(list(points), dtype=float))

    @classmethod
    def uniform(cls, n: int, rng: np.random.Generator) -> "SamplingGrid":
        """n points drawn uniformly in [0, 1], sorted."""
        if n < 0:
            raise DomainError(f"n must be >= 0 (got {n})")
        return cls(np.sort(rng.uniform(0.0, 1.0, size=n)))

    @classmethod
    def equispaced(cls, n: int) -> "SamplingGrid":
        if n < 0:
            raise DomainError(f"n must be >= 0 (got {n})")
        return cls(np.linspace(0.0, 1.0, n) if n > 1 else np.full(n, 0.5))

    def reversed(self) -> "SamplingGrid":
        """The mirrored grid s_i -> 1 - s_{n+1-i}."""
        return SamplingGrid(1.0 - self.points[::-1])

    def to_list(self) -> List[float]:
        return self.points.tolist()


@dataclass(frozen=True)
class BivariateSample:
    """Paired observations z1 = Z1(s), z2 = Z2(s) on a SamplingGrid."""

    z1: np.ndarray
    z2: np.ndarray
    grid: SamplingGrid

    def __post_init__(self):
        z1, z2 = _frozen(self.z1), _frozen(self.z2)
        if z1.size != self.grid.n or z2.size != self.grid.n:
            raise DomainError(
                "sample length must match the grid",
                context={"len_z1": int(z1.size), "len_z2": int(z2.size), "n": self.grid.n},
            )
        if not (np.all(np.isfinite(z1)) and np.all(np.isfinite(z2))):
            raise DomainError("sample values must be finite")
        object.__setattr__(self, "z1", z1)
        object.__setattr__(self, "z2", z2)

    @property
    def n(self) -> int:
        return self.grid.n

    def stacked(self) -> np.ndarray:
        """Z_n = (z1^T, z2^T)^T, the ordering used by A kron R."""
        return np.concatenate([self.z1, self.z2])

    def scaled(self, c: float) -> "BivariateSample":
        return BivariateSample(self.z1 * c, self.z2 * c, self.grid)

    def swapped(self) -> "BivariateSample":
        return BivariateSample(self.z2, self.z1, self.grid)

    def reversed(self) -> "BivariateSample":
        return BivariateSample(self.z1[::-1], self.z2[::-1], self.grid.reversed())


# ============================================================================
# COVARIANCE
# ============================================================================

def kernel(params: Params, i: int, j: int, h: float) -> float:
    """Cross-covariance between components i and j at distance h."""
    if i not in (1, 2) or j not in (1, 2):
        raise DomainError(f"component indices must be 1 or 2 (got {i}, {j})")
    if not math.isfinite(h):
        raise DomainError(f"distance must be finite (got {h})")
    sig = (params.sigma1, params.sigma2)
    colocated = 1.0 if i == j else params.rho
    return sig[i - 1] * sig[j - 1] * colocated * math.exp(-params.theta * abs(h))


def correlation_matrix(theta: float, grid: SamplingGrid) -> np.ndarray:
    """R = [exp(-theta |s_m - s_l|)]."""
    s = grid.points
    return np.exp(-theta * np.abs(s[:, None] - s[None, :]))


def dense_covariance(params: Params, grid: SamplingGrid) -> np.ndarray:
    """Sigma(psi) = A kron R, a 2n x 2n matrix."""
    if grid.n == 0:
        raise DomainError("cannot build a covariance matrix on an empty grid")
    return np.kron(params.A, correlation_matrix(params.theta, grid))


def params_summary(params: Params) -> Dict[str, float]:
    return {**params.model_dump(), "practical_range": params.practical_range}
