"""GARCH(p, q) simulation, quasi-maximum likelihood estimation and bootstrap inference."""

__version__ = "0.1.0"

from garchboot.bootstrap import (  # noqa: E402
    BootstrapResult,
    WeightScheme,
    draw_weights,
    fit_weighted_bootstrap,
    residual_bootstrap,
    standardize_residuals,
    weighted_negative_loglik,
)
from garchboot.core import (  # noqa: E402
    GarchSpec,
    InnovationDistribution,
    SamplePath,
    check_identifiability,
    companion_matrix,
    estimate_lyapunov,
    is_second_order_stationary,
    simulate,
)
from garchboot.inference import (  # noqa: E402
    ConfidenceEllipse,
    ConfidenceInterval,
    confidence_ellipse,
    ellipse_contains,
    percentile_interval,
    sae,
)
from garchboot.qmle import (  # noqa: E402
    FitConfig,
    QmleFit,
    asymptotic_covariance,
    conditional_variances,
    estimate_J,
    estimate_kurtosis,
    fit_qmle,
    negative_quasi_loglik,
)
