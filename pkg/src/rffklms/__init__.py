"""Online kernel filters built on random Fourier features."""
from .analysis import (
    ConvergencePrediction,
    CorrelationModel,
    a_recursion,
    max_eigenvalue,
    optimal_theta,
    predict_convergence,
    rzz_closed_form,
    rzz_monte_carlo,
    steady_state_mse,
    step_size_bound,
)
from .datagen import ChaoticA, ChaoticB, KernelExpansion, Quadratic, generate
from .exceptions import (
    BoundViolationError,
    ConvergenceError,
    DimensionError,
    NumericalBreakdownError,
    PoisonedStreamError,
)
from .filters import QKLMS, RFFKLMS, RFFRLS, restore_filter
from .kernelcore import (
    GaussianKernel,
    RandomFeatureMap,
    kernel_approx,
    kernel_exact,
    sample_feature_map,
    transform,
)

__version__ = "0.1.0"
