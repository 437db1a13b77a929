"""Core module exports"""

from .fields import HamiltonianField
from .flows import (
    CommutatorGenerator,
    FlowMap,
    GrowthBound,
    Trajectory,
    advance_flow,
    commutator_flow,
    commutator_generator,
    conjugated_flow,
    flow_map,
    flow_points,
    generated_flow,
    linear_growth_bound,
    pullback,
    pullback_hamiltonian,
    symplectic_gradient,
)
from .geometry import (
    bracket_hamiltonian,
    c0_norm,
    partial_derivative,
    poisson_bracket,
    quadrature,
    read_field_csv,
    sample_field,
    stencil_weights,
    write_field_csv,
)
from .lie_algebra import (
    AlgebraElement,
    NormedLieAlgebra,
    ad_power,
    bracket,
    bracket_norm_constant,
    builtin,
    nilpotency_degree,
)
from .pseudo_rep import (
    PseudoRepresentation,
    ad_series,
    defect_norm,
    lemma3_residual,
    limit_representation_check,
    rho,
    tail_bound,
)
from .reporter import Reporter
from .runner import ExperimentRunner

__all__ = [
    "AlgebraElement",
    "CommutatorGenerator",
    "ExperimentRunner",
    "FlowMap",
    "GrowthBound",
    "HamiltonianField",
    "NormedLieAlgebra",
    "PseudoRepresentation",
    "Reporter",
    "Trajectory",
    "ad_power",
    "ad_series",
    "advance_flow",
    "bracket",
    "bracket_hamiltonian",
    "bracket_norm_constant",
    "builtin",
    "c0_norm",
    "commutator_flow",
    "commutator_generator",
    "conjugated_flow",
    "defect_norm",
    "flow_map",
    "flow_points",
    "generated_flow",
    "lemma3_residual",
    "limit_representation_check",
    "linear_growth_bound",
    "nilpotency_degree",
    "partial_derivative",
    "poisson_bracket",
    "pullback",
    "pullback_hamiltonian",
    "quadrature",
    "read_field_csv",
    "rho",
    "sample_field",
    "stencil_weights",
    "symplectic_gradient",
    "tail_bound",
    "write_field_csv",
]
