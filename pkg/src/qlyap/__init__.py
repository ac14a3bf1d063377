"""Lyapunov feedback control of closed N-level quantum systems."""
from .controller import (
    ControllerConfig,
    FeedbackLaw,
    OddFunction,
    control_law,
    control_terms,
    equivalence_class_min_value,
    lyapunov_derivative,
    lyapunov_value,
)
from .core import (
    Spectrum,
    as_hermitian,
    as_state,
    basis_state,
    commutator,
    expectation,
    fidelity,
    hermitian_eigendecompose,
    inner,
    is_positive_definite,
)
from .design import (
    build_commuting_p,
    build_spectral_p,
    check_offdiagonal_condition,
    generate_random_p,
)
from .invariant import (
    case1_residuals,
    case1_structural_condition,
    case2_residuals,
    classify_case,
    classify_limit,
    theorem2_sampling_oracle,
)
from .simulate import SimulationConfig, Trajectory, propagate_step, simulate, step_doubling_check
from .system import (
    ControlledSystem,
    check_assumptions,
    check_controllability,
    check_lambda_nondegenerate,
    check_no_common_eigenvector,
    check_target_assumptions,
    hamiltonian_at,
)

__version__ = "0.1.0"
