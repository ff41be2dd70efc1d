"""Steady-state cumulant tools for linear Lévy-driven SDE models on graphs.

The package solves the steady-state cumulant equations of a stable linear
SDE driven by a Lévy process, certifies identifiability of the drift
sparsity pattern through coefficient-matrix ranks, estimates the scale-free
drift from higher-order empirical cumulants with asymptotic inference, and
samples the stationary law exactly for compound Poisson noise.
"""

from .cli import StudyConfig, StudyResult, main, run_study
from .coefficients import (
    CoefficientSystem,
    WitnessReport,
    all_edges,
    assemble_system,
    det_expansion_coefficient,
    det_expansion_identity_holds,
    drift_coefficient_matrix,
    generic_identifiability_check,
    known_noise_identifiability_check,
    numerical_rank,
    off_diagonal_indices,
    polytree_rank_witness,
    random_sparse_model,
    witness_lowest_coefficient_magnitude,
    witness_lowest_degree,
    witness_matrix,
)
from .cumulants import (
    OmegaEstimate,
    beta_raw_moment,
    bootstrap_omega,
    compound_poisson_cumulants,
    cumulant_from_moments,
    empirical_cumulants,
    empirical_raw_moment,
    estimate_omega,
    moment_from_cumulants,
    population_omega,
    set_partitions,
    stack_unique,
    stacked_labels,
)
from .estimation import (
    AsymptoticCovariance,
    DriftEstimate,
    SingularVectorJacobian,
    asymptotic_covariance,
    estimate_drift,
    least_singular_vector,
    moore_penrose,
    singular_vector_jacobian,
)
from .graphs import (
    DirectedGraph,
    GraphCycleError,
    Trek,
    connected_components,
    enumerate_treks,
    spanning_polytree,
    sparsity_project,
    topological_order,
)
from .lyapunov import (
    ModelParameters,
    SingularSystemError,
    eigenvalue_sum_margin,
    forward_map,
    is_stable,
    lyapunov_operator_matrix,
    solve_lyapunov,
    special_drift_matrix,
    trek_closed_form,
)
from .sampling import (
    BetaJumps,
    ConstantJumps,
    LevySpec,
    TwoPointJumps,
    population_state_cumulants,
    sample_steady_state,
    steady_state_mean,
    study_covariance,
    study_drift_matrix,
    two_point_jumps,
)
from .tensors import (
    SymmetricTensor,
    canonical_index,
    kron_sum_matrix,
    multiplicity,
    n_mode_product,
    unique_indices,
    vec,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticCovariance",
    "BetaJumps",
    "CoefficientSystem",
    "ConstantJumps",
    "DirectedGraph",
    "DriftEstimate",
    "GraphCycleError",
    "LevySpec",
    "ModelParameters",
    "OmegaEstimate",
    "SingularSystemError",
    "SingularVectorJacobian",
    "StudyConfig",
    "StudyResult",
    "SymmetricTensor",
    "Trek",
    "TwoPointJumps",
    "WitnessReport",
    "all_edges",
    "assemble_system",
    "asymptotic_covariance",
    "beta_raw_moment",
    "bootstrap_omega",
    "canonical_index",
    "compound_poisson_cumulants",
    "connected_components",
    "cumulant_from_moments",
    "det_expansion_coefficient",
    "det_expansion_identity_holds",
    "drift_coefficient_matrix",
    "eigenvalue_sum_margin",
    "empirical_cumulants",
    "empirical_raw_moment",
    "enumerate_treks",
    "estimate_drift",
    "estimate_omega",
    "forward_map",
    "generic_identifiability_check",
    "is_stable",
    "known_noise_identifiability_check",
    "kron_sum_matrix",
    "least_singular_vector",
    "lyapunov_operator_matrix",
    "main",
    "moment_from_cumulants",
    "moore_penrose",
    "multiplicity",
    "n_mode_product",
    "numerical_rank",
    "off_diagonal_indices",
    "polytree_rank_witness",
    "population_omega",
    "population_state_cumulants",
    "random_sparse_model",
    "run_study",
    "sample_steady_state",
    "set_partitions",
    "singular_vector_jacobian",
    "solve_lyapunov",
    "spanning_polytree",
    "sparsity_project",
    "special_drift_matrix",
    "stack_unique",
    "stacked_labels",
    "steady_state_mean",
    "study_covariance",
    "study_drift_matrix",
    "topological_order",
    "trek_closed_form",
    "two_point_jumps",
    "unique_indices",
    "vec",
    "witness_lowest_coefficient_magnitude",
    "witness_lowest_degree",
    "witness_matrix",
]
