"""HDG discretization of Dirichlet boundary control for convection-diffusion."""

from .mesh import Mesh, MeshHierarchy, build_structured, face_geometry, refine
from .problem import ProblemData, mms_forward_case, paper_example, validate
from .hdg import (
    DiscreteTuple,
    DofMap,
    SolutionFields,
    apply_B1,
    apply_B2,
    assemble_condensed,
    assemble_monolithic,
    build_dof_map,
    optimality_residual,
    solve_forward,
    solve_optimality,
)

__version__ = "0.1.0"
