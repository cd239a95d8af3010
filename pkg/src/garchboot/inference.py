"""Bootstrap confidence intervals, normal-theory confidence ellipsoids and coverage tallies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from garchboot.bootstrap import BootstrapResult

__all__ = [
    "ConfidenceEllipse",
    "ConfidenceInterval",
    "CoverageRecord",
    "CoverageTally",
    "basic_interval",
    "chi2_quantile",
    "confidence_ellipse",
    "coverage_record",
    "ellipse_contains",
    "percentile_interval",
    "sae",
]

MIN_REPLICATES = 20


@dataclass(frozen=True)
class ConfidenceInterval:
    parameter_index: int
    lower: float
    upper: float
    level: float
    method: str

    def __post_init__(self) -> None:
        if not self.lower <= self.upper:
            raise ValueError("lower bound exceeds upper bound")


@dataclass(frozen=True, eq=False)
class ConfidenceEllipse:
    """Closed set ``{theta : n (theta - center)^T shape^{-1} (theta - center) <= threshold}``."""

    center: np.ndarray
    shape: np.ndarray
    n: int
    level: float
    threshold: float
    precision: np.ndarray

    def contains(self, theta) -> bool:
        return ellipse_contains(self, theta)

    def quadratic_form(self, theta) -> float:
        d = np.asarray(theta, dtype=float) - self.center
        return float(self.n * d @ self.precision @ d)


@dataclass(frozen=True)
class CoverageRecord:
    parameter_index: int
    below: bool
    inside: bool
    above: bool


def _column(replicates, index: int) -> np.ndarray:
    reps = replicates.replicates if isinstance(replicates, BootstrapResult) else replicates
    col = np.asarray(reps, dtype=float)
    col = col[:, index] if col.ndim == 2 else col
    if col.shape[0] < MIN_REPLICATES:
        raise ValueError(f"need at least {MIN_REPLICATES} replicates, got {col.shape[0]}")
    return col


def percentile_interval(replicates, index: int, level: float) -> ConfidenceInterval:
    """Empirical ``(1 - level)/2`` and ``(1 + level)/2`` quantiles of one replicate column.

    Quantiles interpolate linearly between order statistics (numpy's
    default ``linear`` method).
    """
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    col = _column(replicates, index)
    lo, hi = np.quantile(col, [(1 - level) / 2, (1 + level) / 2])
    return ConfidenceInterval(index, float(lo), float(hi), level, "percentile")


def basic_interval(replicates: BootstrapResult, index: int, level: float) -> ConfidenceInterval:
    """Percentile interval reflected about the base estimate."""
    pct = percentile_interval(replicates, index, level)
    center = replicates.base_fit.theta[index]
    return ConfidenceInterval(index, 2 * center - pct.upper, 2 * center - pct.lower, level, "basic")


def chi2_quantile(level: float, dof: int) -> float:
    return float(stats.chi2.ppf(level, dof))


def confidence_ellipse(theta_hat, cov, n: int, level: float) -> ConfidenceEllipse:
    """Normal-theory confidence set for ``theta`` from an n-scaled covariance matrix."""
    center = np.asarray(theta_hat, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (center.shape[0], center.shape[0]):
        raise ValueError("covariance does not match the parameter dimension")
    if not np.allclose(cov, cov.T):
        raise ValueError("covariance must be symmetric")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as err:
        raise ValueError("covariance must be positive definite") from err
    inv_chol = np.linalg.inv(chol)
    precision = inv_chol.T @ inv_chol
    threshold = chi2_quantile(level, center.shape[0])
    return ConfidenceEllipse(center, cov, int(n), level, threshold, precision)


def ellipse_contains(e: ConfidenceEllipse, theta0) -> bool:
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != e.center.shape:
        raise ValueError("dimension mismatch")
    return e.quadratic_form(theta0) <= e.threshold


def sae(theta_hat, theta0) -> float:
    """Sum of absolute errors over all parameters."""
    a = np.asarray(theta_hat, dtype=float)
    b = np.asarray(theta0, dtype=float)
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    return float(np.sum(np.abs(a - b)))


def coverage_record(ci: ConfidenceInterval, true_value: float) -> CoverageRecord:
    """``below``: the true value lies below the interval; ``above``: above it."""
    below = true_value < ci.lower
    above = true_value > ci.upper
    return CoverageRecord(ci.parameter_index, below, not (below or above), above)


@dataclass
class CoverageTally:
    below: int = 0
    inside: int = 0
    above: int = 0

    def add(self, rec: CoverageRecord) -> None:
        self.below += rec.below
        self.inside += rec.inside
        self.above += rec.above

    @property
    def total(self) -> int:
        return self.below + self.inside + self.above

    def percentages(self) -> tuple[float, float, float]:
        t = self.total
        return 100.0 * self.below / t, 100.0 * self.inside / t, 100.0 * self.above / t
