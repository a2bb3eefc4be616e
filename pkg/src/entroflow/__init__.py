"""Entropy-ascent flows on matrix exponential families with marginal-entropy
constraints: BKM geometry, constraint projectors, dissipative/reversible flow
integration, and modular (thermal-lock) diagnostics.
"""

from .classical import (
    JointDistribution,
    ObstructionCertificate,
    ShannonSummary,
    bernoulli_chart,
    classical_origin_infeasible,
    random_joint_distribution,
    shannon_entropies,
)
from .constraint import (
    ConstraintGeometry,
    constraint_geometry,
    constraint_gradient,
    constraint_hessian,
    constraint_max,
    kernel_basis,
    marginal_entropy_sum,
    marginal_jacobian,
    marginal_projector,
    second_order_admissibility,
    soft_mode_count,
    stiffness_rayleigh,
    stiffness_spectrum,
)
from .errors import (
    BoundaryStateError,
    ConservationError,
    DomainError,
    EntroflowError,
    FullyConstrainedError,
    IntegrationError,
    NonLocalGeneratorError,
    NumericalDegeneracyError,
    StationaryPointError,
    StiffRegionError,
    UnsupportedShapeError,
)
from .expfamily import (
    ExpFamilyPoint,
    bkm_kernel_matrix,
    bkm_metric,
    entropy_and_gradient,
    family_generator,
    log_partition,
    make_point,
    mean_params,
    params_from_state,
    state_derivatives,
    state_from_params,
)
from .flow import (
    FlowConfig,
    Trajectory,
    assemble_local_generator,
    dissipative_velocity,
    entropy_production_rate,
    entropy_time_fit,
    entropy_time_velocity,
    combined_velocity,
    integrate,
    reversible_velocity,
)
from .modular import (
    GibbsFamily,
    confined_regime_check,
    gibbs_entropy_derivative,
    gibbs_family,
    gibbs_lock_residual,
    modular_energy_sum,
    modular_hamiltonian,
    total_modular_consistency,
)
from .operators import (
    OperatorBasis,
    SubsystemShape,
    as_shape,
    commutator,
    embed_local,
    exp_divided_difference,
    frechet_exp,
    gell_mann_basis,
    hermitian_eig,
    hermitian_vec,
    matrix_exp,
    matrix_function,
    matrix_log,
    matrix_power,
    partial_trace,
    product_basis,
    tensor_product,
)
from .states import (
    check_density_matrix,
    entropy_of_spectrum,
    gibbs_state,
    lme_origin,
    marginal_entropies,
    multi_information,
    purity,
    random_density_matrix,
    random_hermitian,
    regularized_origin,
    von_neumann_entropy,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryStateError",
    "ConservationError",
    "ConstraintGeometry",
    "DomainError",
    "EntroflowError",
    "ExpFamilyPoint",
    "FlowConfig",
    "FullyConstrainedError",
    "GibbsFamily",
    "IntegrationError",
    "JointDistribution",
    "NonLocalGeneratorError",
    "NumericalDegeneracyError",
    "ObstructionCertificate",
    "OperatorBasis",
    "ShannonSummary",
    "StationaryPointError",
    "StiffRegionError",
    "SubsystemShape",
    "Trajectory",
    "UnsupportedShapeError",
    "as_shape",
    "assemble_local_generator",
    "bernoulli_chart",
    "bkm_kernel_matrix",
    "bkm_metric",
    "check_density_matrix",
    "classical_origin_infeasible",
    "commutator",
    "confined_regime_check",
    "constraint_geometry",
    "constraint_gradient",
    "constraint_hessian",
    "constraint_max",
    "dissipative_velocity",
    "embed_local",
    "entropy_and_gradient",
    "entropy_of_spectrum",
    "entropy_production_rate",
    "entropy_time_fit",
    "entropy_time_velocity",
    "exp_divided_difference",
    "family_generator",
    "frechet_exp",
    "gell_mann_basis",
    "combined_velocity",
    "gibbs_entropy_derivative",
    "gibbs_family",
    "gibbs_lock_residual",
    "gibbs_state",
    "hermitian_eig",
    "hermitian_vec",
    "integrate",
    "kernel_basis",
    "lme_origin",
    "log_partition",
    "make_point",
    "marginal_entropies",
    "marginal_entropy_sum",
    "marginal_jacobian",
    "marginal_projector",
    "matrix_exp",
    "matrix_function",
    "matrix_log",
    "matrix_power",
    "mean_params",
    "modular_energy_sum",
    "modular_hamiltonian",
    "multi_information",
    "params_from_state",
    "partial_trace",
    "product_basis",
    "purity",
    "random_density_matrix",
    "random_hermitian",
    "random_joint_distribution",
    "regularized_origin",
    "reversible_velocity",
    "second_order_admissibility",
    "shannon_entropies",
    "soft_mode_count",
    "state_derivatives",
    "state_from_params",
    "stiffness_rayleigh",
    "stiffness_spectrum",
    "tensor_product",
    "total_modular_consistency",
    "von_neumann_entropy",
]
