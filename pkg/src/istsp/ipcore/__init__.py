"""Integer linear programs and an exact LP-based branch and bound."""
from .backends import BACKENDS, get_backend, highs_solve
from .model import FEAS_TOL, Constraint, IPModel, ModelError, Variable
from .solver import (
    BranchAndBound,
    Checkpoint,
    LPError,
    LPInfeasible,
    LPUnbounded,
    SolveOptions,
    SolveResult,
    lp_relax,
    solve,
)

__all__ = [
    "BACKENDS", "BranchAndBound", "Checkpoint", "Constraint", "FEAS_TOL", "IPModel", "LPError",
    "LPInfeasible", "LPUnbounded", "ModelError", "SolveOptions", "SolveResult", "Variable",
    "get_backend", "highs_solve", "lp_relax", "solve",
]
