"""Weighted (multiplier) bootstrap and residual bootstrap for the GARCH QMLE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from garchboot import _kernels
from garchboot.core import GarchSpec, SamplePath
from garchboot.qmle import (
    FitConfig,
    QmleFit,
    _minimize,
    _standardize,
    _values,
    default_starts,
    fit_qmle,
    normalized,
)
from garchboot.seeding import derive_seed, make_rng

__all__ = [
    "BootstrapResult",
    "WeightScheme",
    "draw_weights",
    "fit_weighted_bootstrap",
    "residual_bootstrap",
    "standardize_residuals",
    "weighted_negative_loglik",
]

UNRELIABLE_FAILURE_RATE = 0.05

_GAMMA = {"multinomial": 2.0, "exp": 2.0, "gamma": 1.0, "ones": 1.0}
_ALIASES = {
    "multinomial": "multinomial",
    "multinom": "multinomial",
    "exp": "exp",
    "exp1": "exp",
    "iidexp1": "exp",
    "gamma": "gamma",
    "iidgamma": "gamma",
    "ones": "ones",
}


class BootstrapError(RuntimeError):
    pass


@dataclass(frozen=True)
class WeightScheme:
    """Law of one row of the bootstrap weight array.

    ``multinomial``: Multinomial(n; 1/n, ..., 1/n) counts.  ``exp``: i.i.d.
    Exp(1).  ``gamma``: i.i.d. Gamma(shape n, rate n).  ``ones``: all weights
    equal to one (a reduction used for testing).
    """

    kind: str = "multinomial"

    def __post_init__(self) -> None:
        kind = _ALIASES.get(self.kind.lower())
        if kind is None:
            raise ValueError(f"unknown weight scheme {self.kind!r}")
        object.__setattr__(self, "kind", kind)

    def gamma(self) -> float:
        """Limit of ``E tau^2``, the inflation factor of the bootstrap covariance."""
        return _GAMMA[self.kind]


def draw_weights(scheme: WeightScheme, n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be positive")
    rng = make_rng(seed)
    if scheme.kind == "multinomial":
        # n independent uniform category draws; counts sum to n exactly
        return np.bincount(rng.integers(0, n, n), minlength=n).astype(float)
    if scheme.kind == "exp":
        return rng.standard_exponential(n)
    if scheme.kind == "gamma":
        return rng.gamma(n, 1.0 / n, n)
    return np.ones(n)


def weighted_negative_loglik(theta: GarchSpec, sample: SamplePath, weights) -> float:
    """``(1/n) sum_t tau_t (x_t^2 / s2_t + log s2_t)``."""
    x = _values(sample)
    w = np.ascontiguousarray(weights, dtype=float)
    if w.shape != x.shape:
        raise ValueError(f"weights length {w.shape[0]} does not match n={x.shape[0]}")
    x2 = x * x
    return float(_kernels.weighted_objective(x2, w, theta.theta, theta.q, np.empty_like(x2)))


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    """Replicate estimates, one row per successful replicate (rows ordered by replicate index)."""

    replicates: np.ndarray
    method: str
    base_fit: QmleFit
    failures: int
    B: int
    gamma: float

    @property
    def unreliable(self) -> bool:
        return self.failures / self.B >= UNRELIABLE_FAILURE_RATE


def _refit(x, weights, config, warm):
    """Warm-started refit; falls back to the full multi-start set if that fails to converge."""
    u_warm = normalized(warm, x)[None, :]
    res = _minimize(x, weights, config, u_warm)
    if not res[3]:
        res = _minimize(x, weights, config, np.vstack((u_warm, default_starts(config))))
    return res


def _base(sample, config, base_fit):
    if base_fit is None:
        base_fit = fit_qmle(sample, config)
    if not base_fit.converged:
        raise BootstrapError("base QMLE fit did not converge")
    return base_fit


def fit_weighted_bootstrap(
    sample: SamplePath,
    scheme: WeightScheme,
    B: int,
    config: FitConfig | None = None,
    seed: int = 0,
    base_fit: QmleFit | None = None,
) -> BootstrapResult:
    """Minimize the weighted objective for ``B`` independent weight draws.

    Replicate ``b`` uses weights drawn with ``derive_seed(seed, "wb", b)`` and
    a refit warm-started at the base estimate.  When a weight row is
    identically one the objective coincides with the unweighted one, and
    the base estimate is returned unchanged.  Non-converged replicates are
    dropped and counted in ``failures``.
    """
    if B < 2:
        raise ValueError("need B >= 2")
    config = config or FitConfig()
    x = _values(sample)
    base_fit = _base(x, config, base_fit)
    theta_hat = base_fit.theta
    reps = []
    failures = 0
    for b in range(B):
        w = draw_weights(scheme, x.shape[0], derive_seed(seed, "wb", b))
        if np.all(w == 1.0):
            reps.append(theta_hat.copy())
            continue
        theta, _, _, conv, _, _ = _refit(x, w, config, theta_hat)
        if conv:
            reps.append(theta)
        else:
            failures += 1
    return BootstrapResult(_stack(reps, base_fit), f"wb-{scheme.kind}", base_fit, failures, B, scheme.gamma())


def standardize_residuals(residuals) -> np.ndarray:
    """Center and scale to sample mean 0 and variance 1 (divisor n)."""
    return _standardize(residuals)


def residual_path(fit: QmleFit, eta_star: np.ndarray, x1: float) -> np.ndarray:
    """Path from the fitted recursion driven by ``eta_star``; presample values are ``x1**2``."""
    x = np.empty_like(eta_star)
    _kernels.bootstrap_recursion(
        np.ascontiguousarray(eta_star, dtype=float), fit.theta, fit.theta_hat.q, x1 * x1, x
    )
    return x


def residual_bootstrap(
    sample: SamplePath,
    fit: QmleFit,
    B: int,
    config: FitConfig | None = None,
    seed: int = 0,
    resample: bool = True,
) -> BootstrapResult:
    """Resample standardized residuals, regenerate paths from the fit, and refit.

    ``resample=False`` feeds the standardized residuals back in their
    original order (a self-consistency check).
    """
    if B < 1:
        raise ValueError("need B >= 1")
    if not fit.converged:
        raise BootstrapError("fit did not converge")
    config = config or FitConfig()
    x = _values(sample)
    n = x.shape[0]
    eta_hat = standardize_residuals(fit.residuals)
    reps = []
    failures = 0
    for b in range(B):
        if resample:
            rng = make_rng(derive_seed(seed, "rb", b))
            eta_star = eta_hat[rng.integers(0, n, n)]
        else:
            eta_star = eta_hat
        x_star = residual_path(fit, eta_star, x[0])
        try:
            theta, _, _, conv, _, _ = _refit(x_star, np.ones(n), config, fit.theta)
        except (ValueError, FloatingPointError):
            conv = False
        if conv:
            reps.append(theta)
        else:
            failures += 1
    return BootstrapResult(_stack(reps, fit), "rb", fit, failures, B, 1.0)


def _stack(reps, fit) -> np.ndarray:
    if not reps:
        return np.empty((0, fit.theta.shape[0]))
    return np.vstack(reps)

