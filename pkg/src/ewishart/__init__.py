"""Elliptical Wishart distributions over SPD matrices.

Density evaluation, sampling, maximum likelihood estimation (fixed-point
and Riemannian solvers under the information geometry of the family),
discriminant-analysis classification, K-means clustering and a synthetic
benchmark harness.
"""

from .errors import (
    DivergenceError,
    EllipticalWishartError,
    ModelError,
    NumericInputError,
    ParameterError,
    RangeError,
    SingularityError,
    TrainingError,
)
from .geometry import (
    MetricCoefficients,
    egrad_to_rgrad,
    exp_map,
    fisher_distance,
    fisher_distance_sq,
    geodesic,
    log_map,
    metric_inner,
    metric_norm,
    retract,
    vector_transport,
)
from .linalg import (
    matrix_exp_sym,
    matrix_log_spd,
    spd_inv_sqrt,
    spd_solve,
    spd_sqrt,
    sym,
    sym_eig,
    validate_spd,
)
from .models import (
    AssumptionReport,
    DensityGenerator,
    EWModel,
    check_assumptions,
    euclidean_gradient,
    log_pdf,
    metric_coefficients,
    neg_log_likelihood,
    riemannian_gradient,
    sample,
    t_wishart_generator,
    t_wishart_model,
    wishart_generator,
    wishart_model,
)
from .estimation import (
    FitOptions,
    FitReport,
    fit,
    fit_fixed_point,
    fit_riemannian,
    fixed_point_step,
    gradient_norm,
    wishart_closed_form,
)
from .learning import (
    ClusteringResult,
    EwdaModel,
    align_labels,
    discriminant,
    ew_kmeans,
    ewda_predict,
    ewda_train,
    inertia,
    twda_discriminant,
    wda_discriminant,
)
from .experiments import (
    ExperimentConfig,
    RunRecord,
    crb_reference,
    random_center,
    run_convergence_study,
    run_error_study,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
