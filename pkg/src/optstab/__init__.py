"""Local convergence analysis of adaptive gradient-descent optimizers.

Treats ADAM, RMSProp, AdaGrad, AdaDelta, and plain gradient descent as
discrete dynamical systems: closed-form fixed-point eigenvalues, spectral
radii, hyperparameter convergence bounds, sampled verification of the
perturbation estimates, and colored hyperparameter region sweeps.
"""

from .dynamics import (
    ADAM_VARIANTS,
    FAMILIES,
    HyperParams,
    OptimizerSpec,
    State,
    autonomous_map,
    fixed_point,
    h_disturbance,
    step,
    theta,
    zero_state,
)
from .errors import (
    CertificateUnavailableError,
    DivergedError,
    DomainError,
    NotACriticalPointError,
    OptstabError,
    UsageError,
    VerificationFailure,
)
from .experiments import (
    AxisSpec,
    SweepCell,
    SweepGrid,
    SweepSpec,
    Trajectory,
    classify_cell,
    classify_convergence,
    preset,
    preset_ids,
    run_trajectory,
    sweep,
    trajectory_csv,
)
from .objectives import Objective, by_name, builtin_ids, fd_check, hessian_spectrum
from .perturbation import (
    EnvelopeFit,
    GradientLowerBound,
    LyapunovCertificate,
    ThetaBoundConstants,
    convergence_envelope,
    gradient_lower_bound,
    lyapunov_certificate,
    lyapunov_value,
    verify_h_bound,
    verify_theta_bound,
)
from .stability import (
    BoundVerdict,
    StabilityReport,
    analyze,
    bound_check,
    classical_bounds,
    closed_form_eigs,
    epsilon_boundary,
    numerical_eigs,
    numerical_jacobian,
    spectral_radius,
)

__version__ = "1.0.0"

__all__ = [
    "ADAM_VARIANTS",
    "FAMILIES",
    "AxisSpec",
    "BoundVerdict",
    "CertificateUnavailableError",
    "DivergedError",
    "DomainError",
    "EnvelopeFit",
    "GradientLowerBound",
    "HyperParams",
    "LyapunovCertificate",
    "NotACriticalPointError",
    "Objective",
    "OptimizerSpec",
    "OptstabError",
    "StabilityReport",
    "State",
    "SweepCell",
    "SweepGrid",
    "SweepSpec",
    "ThetaBoundConstants",
    "Trajectory",
    "UsageError",
    "VerificationFailure",
    "analyze",
    "autonomous_map",
    "bound_check",
    "builtin_ids",
    "by_name",
    "classical_bounds",
    "classify_cell",
    "classify_convergence",
    "closed_form_eigs",
    "convergence_envelope",
    "epsilon_boundary",
    "fd_check",
    "fixed_point",
    "gradient_lower_bound",
    "h_disturbance",
    "hessian_spectrum",
    "lyapunov_certificate",
    "lyapunov_value",
    "numerical_eigs",
    "numerical_jacobian",
    "preset",
    "preset_ids",
    "run_trajectory",
    "spectral_radius",
    "step",
    "sweep",
    "theta",
    "trajectory_csv",
    "verify_h_bound",
    "verify_theta_bound",
    "zero_state",
]
