from .assembly import (
    CondensationFailure,
    ForwardSolution,
    assemble_condensed,
    assemble_monolithic,
    solve_forward,
    solve_optimality,
)
from .dofs import DiscreteTuple, DofMap, SolutionFields, UnsupportedDegree, build_dof_map
from .operators import apply_B1, apply_B2, optimality_residual
