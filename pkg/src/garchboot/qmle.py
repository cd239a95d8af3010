"""Gaussian quasi-maximum likelihood estimation for GARCH(p, q) models."""

from __future__ import annotations

from dataclasses import dataclass, fields
import math
import warnings

import numpy as np

from garchboot import _kernels
from garchboot.core import GarchSpec, InnovationDistribution, SamplePath, simulate
from garchboot.seeding import make_rng

__all__ = [
    "CondVarSeries",
    "FitConfig",
    "JEstimate",
    "NonStationaryError",
    "QmleFit",
    "SampleTooShortError",
    "ShortSampleWarning",
    "asymptotic_covariance",
    "conditional_variances",
    "estimate_J",
    "estimate_kurtosis",
    "fit_qmle",
    "negative_quasi_loglik",
]

J_DISCARD = 500
MAX_CONDITION = 1e12


class SampleTooShortError(ValueError):
    pass


class NonStationaryError(ValueError):
    pass


class ShortSampleWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings for :func:`fit_qmle`.

    The box is ``omega in [omega_min, omega_max_factor * var(x)]`` and every
    ``alpha_i``, ``beta_j`` in ``[0, coef_max]``; ``sum(beta) > coef_max`` is
    penalized.  Convergence needs the simplex objective spread below
    ``fatol`` and the vertex spread below ``xatol``, measured in the
    coordinates ``(omega / var(x), alpha, beta)``.
    """

    p: int = 0
    q: int = 1
    omega_min: float = 1e-6
    omega_max_factor: float = 10.0
    coef_max: float = 0.9999
    starts: int = 5
    max_iter: int = 2000
    fatol: float = 1e-10
    xatol: float = 1e-8
    start_seed: int = 0
    min_obs_factor: int = 10
    warn_obs_factor: int = 20

    def __post_init__(self) -> None:
        if self.p < 0 or self.q < 0:
            raise ValueError("model orders must be nonnegative")
        if self.starts < 1:
            raise ValueError("need at least one start")
        if not 0 < self.coef_max < 1:
            raise ValueError("coef_max must lie in (0, 1)")

    @property
    def dim(self) -> int:
        return 1 + self.p + self.q

    @classmethod
    def from_mapping(cls, values: dict) -> FitConfig:
        """Build from a flat mapping, ignoring keys that are not fields."""
        kwargs = {}
        for f in fields(cls):
            if f.name in values:
                kind = type(getattr(cls, f.name))
                v = values[f.name]
                kwargs[f.name] = int(float(v)) if kind is int else kind(v)
        return cls(**kwargs)


@dataclass(frozen=True, eq=False)
class CondVarSeries:
    sigma2: np.ndarray
    theta: GarchSpec


@dataclass(frozen=True, eq=False)
class QmleFit:
    theta_hat: GarchSpec
    neg_loglik: float
    residuals: np.ndarray
    sigma2: np.ndarray
    converged: bool
    iterations: int
    boundary_flag: bool
    start_index: int = 0

    @property
    def theta(self) -> np.ndarray:
        return self.theta_hat.theta


@dataclass(frozen=True, eq=False)
class JEstimate:
    J: np.ndarray
    N: int
    kappa: float


def _as_theta(theta) -> tuple[np.ndarray, int]:
    if isinstance(theta, GarchSpec):
        return theta.theta, theta.q
    raise TypeError("theta must be a GarchSpec")


def _values(sample) -> np.ndarray:
    if isinstance(sample, SamplePath):
        return sample.values
    return np.ascontiguousarray(sample, dtype=float)


def conditional_variances(theta: GarchSpec, sample: SamplePath) -> CondVarSeries:
    """Variance recursion driven by the data, with all presample values set to ``x_1^2``."""
    x = _values(sample)
    if x.shape[0] < 1:
        raise ValueError("need at least one observation")
    th, q = _as_theta(theta)
    out = np.empty_like(x)
    _kernels.cond_var(x * x, th, q, out)
    return CondVarSeries(out, theta)


def negative_quasi_loglik(theta: GarchSpec, sample: SamplePath) -> float:
    """Average Gaussian negative log quasi-likelihood (without the ``log 2 pi`` constant)."""
    x = _values(sample)
    th, q = _as_theta(theta)
    x2 = x * x
    return float(_kernels.weighted_objective(x2, np.ones_like(x2), th, q, np.empty_like(x2)))


def _box(config: FitConfig, scale: float) -> tuple[np.ndarray, np.ndarray]:
    d = config.dim
    lb = np.zeros(d)
    ub = np.full(d, config.coef_max)
    lb[0] = config.omega_min / scale
    ub[0] = config.omega_max_factor
    return lb, ub


def default_starts(config: FitConfig) -> np.ndarray:
    """Start points in normalized coordinates ``(omega / var(x), alpha, beta)``.

    The first is a fixed heuristic; the rest are uniform in the box,
    with coefficients rescaled so their sum is at most 0.95.
    """
    p, q, d = config.p, config.q, config.dim
    starts = np.empty((config.starts, d))
    first = np.empty(d)
    first[0] = 0.1
    first[1 : 1 + q] = 0.1 / q if q else 0.0
    first[1 + q :] = 0.8 / p if p else 0.0
    starts[0] = first
    rng = make_rng(config.start_seed)
    for k in range(1, config.starts):
        u = np.empty(d)
        u[0] = rng.uniform(0.0, config.omega_max_factor)
        c = rng.uniform(0.0, config.coef_max, d - 1)
        total = c.sum()
        if total > 0.95:
            c *= 0.95 / total
        u[1:] = c
        starts[k] = u
    return starts


def _scale(x: np.ndarray) -> float:
    scale = float(np.var(x))
    if not scale > 0:
        scale = float(np.mean(x * x)) or 1.0
    return scale


def _initial_step(u0: np.ndarray) -> np.ndarray:
    return np.maximum(0.1 * np.abs(u0), 0.05)


def _minimize(
    x: np.ndarray,
    weights: np.ndarray,
    config: FitConfig,
    starts: np.ndarray,
) -> tuple[np.ndarray, float, int, bool, int, bool]:
    """Run the simplex search from each start and keep the best (lowest index on ties)."""
    x2 = x * x
    scale = _scale(x)
    lb, ub = _box(config, scale)
    best = None
    for k, u0 in enumerate(starts):
        u, f, nit, conv = _kernels.nelder_mead(
            x2, weights, config.q, scale, lb, ub, np.asarray(u0, dtype=float),
            _initial_step(u0), config.coef_max, config.fatol, config.xatol, config.max_iter,
        )
        if best is None or f < best[1]:
            best = (u, f, nit, conv, k)
    u, f, nit, conv, k = best
    theta = u.copy()
    theta[0] *= scale
    on_bound = bool(np.any(u <= lb + 1e-8) or np.any(u >= ub - 1e-8))
    return theta, float(f), int(nit), bool(conv), k, on_bound


def check_length(n: int, config: FitConfig) -> None:
    d = config.dim
    if n < max(config.min_obs_factor * d, max(config.p, config.q) + 1):
        raise SampleTooShortError(
            f"sample too short: n={n} < {config.min_obs_factor * d} for {d} parameters"
        )
    if n < config.warn_obs_factor * d:
        warnings.warn(
            f"n={n} is below the recommended {config.warn_obs_factor * d} observations",
            ShortSampleWarning,
            stacklevel=3,
        )


def normalized(theta: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Map a parameter vector into the optimizer's normalized coordinates."""
    u = np.array(theta, dtype=float)
    u[0] /= _scale(x)
    return u


def _make_fit(x, theta, q, f, nit, conv, on_bound, k) -> QmleFit:
    spec = GarchSpec.from_theta(theta, q)
    s2 = np.empty_like(x)
    _kernels.cond_var(x * x, theta, q, s2)
    return QmleFit(spec, f, x / np.sqrt(s2), s2, conv, nit, on_bound, k)


def fit_qmle(sample: SamplePath, config: FitConfig | None = None, starts=None) -> QmleFit:
    """Minimize the negative quasi-log-likelihood over the parameter box.

    Parameters
    ----------
    sample : SamplePath or array_like
        Observations ``x_1..x_n``.
    config : FitConfig, optional
        Model orders and optimizer settings.
    starts : array_like, optional
        Start points as parameter vectors ``(omega, alpha, beta)``; defaults
        to :func:`default_starts`.

    Returns
    -------
    QmleFit
        The best of the multi-start runs.  ``converged`` is False when the
        winning run hit ``max_iter``.
    """
    config = config or FitConfig()
    x = _values(sample)
    check_length(x.shape[0], config)
    if starts is None:
        u_starts = default_starts(config)
    else:
        u_starts = np.array([normalized(s, x) for s in np.atleast_2d(starts)])
    theta, f, nit, conv, k, on_bound = _minimize(x, np.ones_like(x), config, u_starts)
    return _make_fit(x, theta, config.q, f, nit, conv, on_bound, k)


def estimate_J(
    theta: GarchSpec,
    dist: InnovationDistribution,
    N: int = 1_000_000,
    seed: int = 0,
) -> JEstimate:
    """Simulation estimate of the information matrix ``E[g g^T / s2^2]``.

    ``g`` is the gradient of the conditional variance w.r.t. ``theta``.  For
    ARCH(1) it is ``(1, x_{t-1}^2)`` exactly; otherwise it comes from the
    differentiated recursion, started at zero with the first ``J_DISCARD``
    steps dropped.
    """
    if not theta.persistence < 1.0:
        raise NonStationaryError("J needs a second-order stationary model")
    if N < 2:
        raise ValueError("N too small")
    path = simulate(theta, dist, N + 1, burn_in=1000, seed=seed)
    x, h = path.values, path.true_variances
    if theta.q == 1 and theta.p == 0:
        x2 = x[:-1] ** 2
        inv = 1.0 / (h[1:] * h[1:])
        j00 = np.mean(inv)
        j01 = np.mean(x2 * inv)
        j11 = np.mean(x2 * x2 * inv)
        J = np.array([[j00, j01], [j01, j11]])
    else:
        discard = min(J_DISCARD, N // 2)
        J = _kernels.outer_gradient_mean(x, h, theta.theta, theta.q, discard)
    asym = np.max(np.abs(J - J.T))
    if asym >= 1e-12 * max(1.0, np.max(np.abs(J))):
        raise ArithmeticError(f"J asymmetric by {asym}")
    return JEstimate(0.5 * (J + J.T), N, dist.kurtosis())


def asymptotic_covariance(J, kappa: float) -> np.ndarray:
    """Limiting covariance ``(kappa - 1) J^{-1}`` of ``sqrt(n) (theta_hat - theta_0)``."""
    mat = J.J if isinstance(J, JEstimate) else np.asarray(J, dtype=float)
    if not kappa > 1 or not math.isfinite(kappa):
        raise ValueError(f"kappa must be finite and > 1, got {kappa}")
    cond = np.linalg.cond(mat)
    if not cond < MAX_CONDITION:
        raise np.linalg.LinAlgError(f"J is numerically singular (condition number {cond:.3g})")
    inv = np.linalg.inv(mat)
    return (kappa - 1.0) * 0.5 * (inv + inv.T)


def _standardize(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape[0] < 2:
        raise ValueError("need at least two residuals")
    mean = r.mean()
    var = np.mean(r * r) - mean * mean
    if not var > 1e-300:
        raise ValueError("residuals have zero variance")
    return (r - mean) / math.sqrt(var)


def estimate_kurtosis(residuals) -> float:
    """Mean fourth power of the standardized residuals."""
    r = np.asarray(residuals, dtype=float)
    if r.shape[0] < 10:
        raise ValueError("need at least 10 residuals")
    z = _standardize(r)
    return float(np.mean(z**4))
