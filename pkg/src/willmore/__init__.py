"""Numerical laboratory for the clamped Willmore problem on graphs.

Solves the fourth-order graph equation in its divergence-reformulated
form by Picard iteration over clamped biharmonic solves, with the
distance-weighted Sobolev / boundary Besov norm machinery needed to
monitor the smallness regime, and verification studies against
closed-form oracles.
"""

__version__ = "0.1.0"

from .errors import (
    AssemblyError,
    ConfigurationError,
    ParameterError,
    SolverConvergenceError,
    SolverError,
    UndefinedRatioError,
    WillmoreError,
)
from .grid import GridDomain, disk, l_shape, polygon, unit_square
from .fields import ScalarField, TensorField, VectorField
from .geometry import (
    area_element,
    b1_terms,
    b2_terms,
    conformal_energy,
    gauss_curvature,
    gradient,
    hessian,
    mean_curvature,
    willmore_energy,
    willmore_operator_divergence,
    willmore_operator_geometric,
)
from .biharmonic import (
    BoundaryData,
    SparseSystem,
    assemble,
    divergence_rhs,
    max_modulus_ratio,
    solve,
)
from .norms import (
    DistanceField,
    NormParams,
    besov_norm,
    besov_seminorm,
    dirichlet_trace_norm,
    distance_field,
    holder_norm,
    parameter_check,
    tangential_gradient,
    weighted_lp_norm,
    weighted_sobolev_norm,
)
from .driver import (
    ContractionSummary,
    ConvergenceReport,
    IterationConfig,
    IterationState,
    apply_G,
    contraction_report,
    iterate,
    willmore_residual,
)
from .studies import (
    FieldSpec,
    RefinementStudy,
    check_reformulation_identity,
    manufactured_biharmonic,
    small_data_sweep,
    sphere_cap_suite,
)
