"""Scalable GP regression via trigonometrically exact quadrature Fourier features."""

from .accel import backend_name
from .errors import TqffError, ConfigError, NumericalError
from .kernels import (
    Hyperparams,
    KernelSpec,
    approx_error_bound,
    kernel_eval,
    standardized_density,
    truncation_tail,
)
from .quadrature import (
    QuadratureRule1D,
    RecurrenceCoefficients,
    TensorRule,
    gauss_hermite_rule,
    gauss_legendre_rule,
    golub_welsch,
    halve_symmetric,
    stieltjes_coefficients,
    tensor_product,
    trig_rule,
)
from .features import (
    FeatureMap,
    approx_error_sweep,
    build_feature_map,
    design_matrix,
    feature_vector,
)
from .gp import (
    GPModel,
    OptConfig,
    PredictiveDistribution,
    ff_fit,
    ff_loglik,
    ff_make_model,
    ff_predict,
    full_gp_fit,
    full_gp_loglik,
    full_gp_predict,
    kl_gaussian,
    metrics,
)
from .oracle import (
    IntegralResult,
    exactness_certificate,
    integrate_adaptive,
    truncated_fourier,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
