"""Numerical laboratory for a 1-D Schrodinger equation with a point defect.

The pieces, bottom up: grids and discrete norms (`grid`), the
tridiagonal defect Hamiltonian and its trapped mode (`operator`),
nonlinearity recipes (`nonlinearity`), the small-amplitude bound-state
family solved by fixed point (`bound_states`), soliton/radiation
splittings (`modulation`), cutoff virial diagnostics (`virial`), time
stepping (`evolution`), and scripted experiment runners (`experiments`).
"""

__version__ = "0.1.0"

from .bound_states import BoundStateFamily, cubic_oracle
from .errors import ConvergenceError
from .evolution import EvolutionConfig, Stepper, TrajectoryRecord, conserved, evolve, step
from .grid import ComplexField, Grid, NormKind, derivative, inner, make_grid, norm
from .modulation import ModulationState, decompose_hc, decompose_pc, r_operator
from .nonlinearity import NonlinearitySpec, power_law, saturating
from .operator import (
    DeltaOperator,
    SpectralData,
    build_operator,
    ground_state_exact,
    project_continuous,
    resolvent_pc,
    spectral_data,
)
from .virial import (
    CommutatorCheck,
    VirialWeights,
    coercivity_report,
    commutator_identity,
    cutoff,
    j_functional,
    make_weights,
)

__all__ = [
    "__version__",
    "BoundStateFamily",
    "cubic_oracle",
    "ConvergenceError",
    "EvolutionConfig",
    "Stepper",
    "TrajectoryRecord",
    "conserved",
    "evolve",
    "step",
    "ComplexField",
    "Grid",
    "NormKind",
    "derivative",
    "inner",
    "make_grid",
    "norm",
    "ModulationState",
    "decompose_hc",
    "decompose_pc",
    "r_operator",
    "NonlinearitySpec",
    "power_law",
    "saturating",
    "DeltaOperator",
    "SpectralData",
    "build_operator",
    "ground_state_exact",
    "project_continuous",
    "resolvent_pc",
    "spectral_data",
    "CommutatorCheck",
    "VirialWeights",
    "coercivity_report",
    "commutator_identity",
    "cutoff",
    "j_functional",
    "make_weights",
]
