"""Spectral flow of paths of symmetric matrices, the gap metric, Maslov indices
and parametrized linear Hamiltonian systems."""

from .config import Options
from .errors import ContinuumOfCrossings, DegenerateCrossing, InvalidInput, NumericalFailure, SflowError
from .gapmetric import gap_delta, gap_distance, graph_projection, perturbation_inequality_check
from .hamiltonian import (
    HamiltonianFamily,
    Perturbation,
    comparison_check,
    fundamental_solution,
    hamiltonian_sfl,
    isolated_bound_check,
    kernel_dimension,
    sweep_nontrivial,
)
from .maslov import (
    LagrangianPath,
    graph_lagrangian,
    intersection_dim,
    is_lagrangian,
    maslov_index,
    maslov_pair_index,
    sfl_via_maslov,
)
from .numerics import kernel_basis, quadform_index, sym_eig, sym_eigvals
from .specflow import (
    OperatorPath,
    concatenate,
    normalization_path,
    reverse,
    riesz_path,
    riesz_transform,
    sfl_crossings,
    sfl_partition,
    spectral_flow,
)
from .suite import RunConfig, run_axiom_suite

__version__ = "0.1.0"

__all__ = [
    "Options",
    "ContinuumOfCrossings", "DegenerateCrossing", "InvalidInput", "NumericalFailure", "SflowError",
    "gap_delta", "gap_distance", "graph_projection", "perturbation_inequality_check",
    "HamiltonianFamily", "Perturbation", "comparison_check", "fundamental_solution", "hamiltonian_sfl",
    "isolated_bound_check", "kernel_dimension", "sweep_nontrivial",
    "LagrangianPath", "graph_lagrangian", "intersection_dim", "is_lagrangian", "maslov_index",
    "maslov_pair_index", "sfl_via_maslov",
    "kernel_basis", "quadform_index", "sym_eig", "sym_eigvals",
    "OperatorPath", "concatenate", "normalization_path", "reverse", "riesz_path", "riesz_transform",
    "sfl_crossings", "sfl_partition", "spectral_flow",
    "RunConfig", "run_axiom_suite",
]
