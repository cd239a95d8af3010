"""GARCH(p, q) model definition, simulation and stationarity checks."""

from __future__ import annotations

from dataclasses import dataclass, field
import math
import re

import numpy as np

from garchboot import _kernels
from garchboot.seeding import make_rng

__all__ = [
    "GarchSpec",
    "IdentifiabilityReport",
    "InnovationDistribution",
    "SamplePath",
    "check_identifiability",
    "companion_matrix",
    "estimate_lyapunov",
    "is_second_order_stationary",
    "simulate",
]

ROOT_TOL = 1e-8
LYAPUNOV_RENORM_EVERY = 10


@dataclass(frozen=True)
class GarchSpec:
    """Parameters ``(omega, alpha_1..alpha_q, beta_1..beta_p)`` of a GARCH(p, q) model.

    ``alpha`` multiplies lagged squared observations, ``beta`` lagged
    conditional variances.  ``q = 0`` together with ``p = 0`` gives a
    constant-variance model.
    """

    omega: float
    alpha: tuple[float, ...] = ()
    beta: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ValueError(f"omega must be positive and finite, got {self.omega}")
        if any(not (a >= 0 and math.isfinite(a)) for a in self.alpha):
            raise ValueError(f"alpha coefficients must be nonnegative, got {self.alpha}")
        if any(not (b >= 0 and math.isfinite(b)) for b in self.beta):
            raise ValueError(f"beta coefficients must be nonnegative, got {self.beta}")

    @property
    def p(self) -> int:
        return len(self.beta)

    @property
    def q(self) -> int:
        return len(self.alpha)

    @property
    def dim(self) -> int:
        return 1 + self.p + self.q

    @property
    def theta(self) -> np.ndarray:
        return np.array((self.omega, *self.alpha, *self.beta), dtype=float)

    @property
    def persistence(self) -> float:
        return sum(self.alpha) + sum(self.beta)

    @property
    def names(self) -> list[str]:
        if self.q == 1 and self.p == 0:
            return ["omega", "alpha"]
        return (
            ["omega"]
            + [f"alpha{i}" for i in range(1, self.q + 1)]
            + [f"beta{j}" for j in range(1, self.p + 1)]
        )

    @classmethod
    def from_theta(cls, theta, q: int) -> GarchSpec:
        theta = np.asarray(theta, dtype=float)
        return cls(theta[0], tuple(theta[1 : 1 + q]), tuple(theta[1 + q :]))

    def unconditional_variance(self) -> float:
        """``omega / (1 - sum(alpha) - sum(beta))``, or ``inf`` if not second-order stationary."""
        if not is_second_order_stationary(self):
            return math.inf
        return self.omega / (1.0 - self.persistence)


@dataclass(frozen=True)
class InnovationDistribution:
    """Law of the i.i.d. innovations: standard Gaussian or unit-variance Student t."""

    kind: str = "gaussian"
    df: float | None = None

    def __post_init__(self) -> None:
        if self.kind == "gaussian":
            if self.df is not None:
                raise ValueError("gaussian innovations take no degrees of freedom")
        elif self.kind == "t":
            if self.df is None or not self.df > 2:
                raise ValueError(f"Student t innovations need df > 2, got {self.df}")
            object.__setattr__(self, "df", float(self.df))
        else:
            raise ValueError(f"unknown innovation kind {self.kind!r}")

    @classmethod
    def gaussian(cls) -> InnovationDistribution:
        return cls("gaussian")

    @classmethod
    def student_t(cls, df: float) -> InnovationDistribution:
        return cls("t", df)

    @classmethod
    def parse(cls, text: str) -> InnovationDistribution:
        """Accepts ``gaussian``/``normal``, ``t5``, ``t:5`` or ``t(5)``."""
        s = text.strip().lower()
        if s in ("gaussian", "normal", "norm"):
            return cls.gaussian()
        m = re.fullmatch(r"t[:(]?\s*([0-9.]+)\s*\)?", s)
        if m is None:
            raise ValueError(f"cannot parse innovation distribution {text!r}")
        return cls.student_t(float(m.group(1)))

    @property
    def label(self) -> str:
        if self.kind == "gaussian":
            return "gaussian"
        return f"t{self.df:g}"

    def kurtosis(self) -> float:
        """Fourth moment ``E eta^4``; infinite for t with df <= 4."""
        if self.kind == "gaussian":
            return 3.0
        if self.df <= 4:
            return math.inf
        return 3.0 * (self.df - 2.0) / (self.df - 4.0)

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.standard_normal(size)
        return rng.standard_t(self.df, size) * math.sqrt((self.df - 2.0) / self.df)


@dataclass(frozen=True, eq=False)
class SamplePath:
    """Observed series, optionally with the model and variances that generated it."""

    values: np.ndarray
    true_spec: GarchSpec | None = None
    true_variances: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("a sample path must be one-dimensional")
        if not np.all(np.isfinite(values)):
            raise ValueError("sample path contains non-finite values")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[0]


def is_second_order_stationary(spec: GarchSpec) -> bool:
    """True iff the coefficients sum to strictly less than one."""
    return spec.persistence < 1.0


def simulate(
    spec: GarchSpec,
    dist: InnovationDistribution,
    n: int,
    burn_in: int = 1000,
    seed: int = 0,
) -> SamplePath:
    """Simulate ``n`` observations after discarding ``burn_in`` warm-up steps.

    The recursion starts with every presample squared value and variance
    equal to the unconditional variance, or to ``omega`` when the model is
    not second-order stationary.  The innovation stream is drawn in one
    block of ``burn_in + n`` values, so the output is a pure function of
    ``(spec, dist, n, burn_in, seed)``.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    rng = make_rng(seed)
    eta = dist.draw(rng, burn_in + n)
    h0 = spec.unconditional_variance()
    if not math.isfinite(h0):
        h0 = spec.omega
    x = np.empty_like(eta)
    h = np.empty_like(eta)
    _kernels.simulate_recursion(eta, spec.theta, spec.q, h0, x, h)
    return SamplePath(x[burn_in:].copy(), spec, h[burn_in:].copy())


def companion_matrix(spec: GarchSpec, eta_sq: float) -> np.ndarray:
    """Random coefficient matrix of the Markov representation ``z_t = b_t + A_t z_{t-1}``.

    The state is ``z_t = (X_t^2, ..., X_{t-q+1}^2, s2_t, ..., s2_{t-p+1})``
    and ``b_t = (omega * eta_t^2, 0, ..., 0, omega, 0, ..., 0)`` with
    ``omega`` in position ``q``; only ``A_t`` is needed here.
    """
    if eta_sq < 0:
        raise ValueError("eta_sq must be nonnegative")
    q, p = spec.q, spec.p
    d = q + p
    coefs = np.array((*spec.alpha, *spec.beta), dtype=float)
    A = np.zeros((d, d))
    if d == 0:
        return A
    A[0] = coefs * eta_sq
    for i in range(1, q):
        A[i, i - 1] = 1.0
    if p > 0:
        A[q] = coefs
        for j in range(1, p):
            A[q + j, q + j - 1] = 1.0
    return A


def estimate_lyapunov(
    spec: GarchSpec,
    dist: InnovationDistribution,
    t_max: int = 1_000_000,
    seed: int = 0,
) -> float:
    """Top Lyapunov exponent of the companion-matrix sequence, from one long product.

    Uses the Frobenius norm; the running product is renormalized every
    ``LYAPUNOV_RENORM_EVERY`` steps and the log norms accumulated.  Returns
    ``-inf`` when all ``alpha`` and ``beta`` are zero (the product is
    the zero matrix).
    """
    if t_max < 1000:
        raise ValueError("t_max must be at least 1000")
    if spec.q + spec.p == 0 or spec.persistence == 0.0:
        return -math.inf
    eta = dist.draw(make_rng(seed), t_max)
    return float(_kernels.lyapunov_product(eta * eta, spec.theta, spec.q, LYAPUNOV_RENORM_EVERY))


@dataclass(frozen=True)
class IdentifiabilityReport:
    beta_sum_below_one: bool
    last_coefficients_nonzero: bool
    alpha_poly_nonzero_at_one: bool
    no_common_roots: bool
    min_root_distance: float = math.inf

    @property
    def ok(self) -> bool:
        return (
            self.beta_sum_below_one
            and self.last_coefficients_nonzero
            and self.alpha_poly_nonzero_at_one
            and self.no_common_roots
        )


def check_identifiability(spec: GarchSpec, tol: float = ROOT_TOL) -> IdentifiabilityReport:
    """Check the identifiability conditions on the lag polynomials.

    ``A(z) = sum alpha_i z^i`` and ``B(z) = 1 - sum beta_j z^j``.  The trivial
    root ``z = 0`` of ``A`` is divided out before comparing roots; two roots
    closer than ``tol`` count as common.
    """
    alpha = np.asarray(spec.alpha, dtype=float)
    beta = np.asarray(spec.beta, dtype=float)
    beta_ok = beta.sum() < 1.0
    last = (alpha[-1] if spec.q else 0.0) + (beta[-1] if spec.p else 0.0)
    a_at_one = alpha.sum() != 0.0

    if spec.p == 0:
        return IdentifiabilityReport(beta_ok, last != 0.0, a_at_one, True)
    if not np.any(alpha):
        # A is identically zero, every root of B is shared
        return IdentifiabilityReport(beta_ok, last != 0.0, a_at_one, False, 0.0)

    # np.roots wants highest degree first; leading zeros are dropped by numpy
    a_roots = np.roots(alpha[::-1])
    b_roots = np.roots(np.concatenate((-beta[::-1], [1.0])))
    if a_roots.size == 0 or b_roots.size == 0:
        dist = math.inf
    else:
        dist = float(np.min(np.abs(a_roots[:, None] - b_roots[None, :])))
    return IdentifiabilityReport(beta_ok, last != 0.0, a_at_one, dist >= tol, dist)
