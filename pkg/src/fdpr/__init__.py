"""Quasi-interpolation with fast-decaying polynomial-reproducing bases.

Two engines build the coefficient functionals: a moving-least-squares
solve (:class:`MovingLeastSquares`, with :class:`Shepard` as its
degree-zero closed form) and a weighted one-norm minimization
(:class:`L1QuasiInterpolant`).  Both follow the scikit-learn estimator
protocol: ``fit(nodes, samples)`` then ``predict(points)``.
"""

from .analysis import (
    ConvergenceReport,
    DecayBound,
    LebesgueScan,
    StabilityBound,
    TheoryConstants,
    cone_constants,
    convergence_study,
    decay_pair,
    lebesgue_scan,
    reproduction_residual,
    stability_bound,
    sup_error,
)
from .basis import BasisSpec, eval_basis, space_dimension, unisolvency_check, vandermonde
from .coefficients import CoefficientVector
from .errors import (
    AdmissibilityError,
    DivergentAtZeroError,
    DivergentSeriesError,
    FdprError,
    IllConditionedSystemError,
    InfeasibleConstructionError,
    InvalidArgumentError,
    NumericalFailureError,
    UnsupportedAngleError,
)
from .geometry import (
    DeltaRule,
    Domain,
    NodeSet,
    fill_distance,
    generate_grid,
    grid_points,
    node_set,
    perturb,
    quasi_uniformity,
    read_nodes_csv,
    scale_delta,
    separation_radius,
    write_nodes_csv,
)
from .lp import L1QuasiInterpolant, LpSolution, LpState
from .mls import MovingLeastSquares, Shepard
from .targets import franke, polynomial_target, resolve_target, sin_pi
from .weights import (
    AdmissibilityReport,
    WeightSpec,
    admissibility_report,
    eval_weight,
    format_weight_spec,
    parse_weight_spec,
    phi,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "AdmissibilityReport",
    "BasisSpec",
    "CoefficientVector",
    "ConvergenceReport",
    "DecayBound",
    "DeltaRule",
    "DivergentAtZeroError",
    "DivergentSeriesError",
    "Domain",
    "FdprError",
    "IllConditionedSystemError",
    "InfeasibleConstructionError",
    "InvalidArgumentError",
    "L1QuasiInterpolant",
    "LebesgueScan",
    "LpSolution",
    "LpState",
    "MovingLeastSquares",
    "NodeSet",
    "NumericalFailureError",
    "Shepard",
    "StabilityBound",
    "TheoryConstants",
    "UnsupportedAngleError",
    "WeightSpec",
    "admissibility_report",
    "cone_constants",
    "convergence_study",
    "decay_pair",
    "eval_basis",
    "eval_weight",
    "fill_distance",
    "format_weight_spec",
    "franke",
    "generate_grid",
    "grid_points",
    "lebesgue_scan",
    "node_set",
    "parse_weight_spec",
    "perturb",
    "phi",
    "polynomial_target",
    "quasi_uniformity",
    "read_nodes_csv",
    "reproduction_residual",
    "resolve_target",
    "scale_delta",
    "separation_radius",
    "sin_pi",
    "space_dimension",
    "stability_bound",
    "sup_error",
    "unisolvency_check",
    "vandermonde",
    "write_nodes_csv",
]
