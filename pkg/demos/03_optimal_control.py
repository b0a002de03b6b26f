"""Solving the boundary control problem
======================================

Convection-diffusion on [0, 1/8]^2 with ``beta = (1, 1)``, no source and a
desired state ``(x^2 + y^2)^(-1/3)`` that blows up at the origin. The optimal
Dirichlet control is found by one sparse solve of the coupled
state/adjoint/optimality system.
"""

# %%
import numpy as np

from hdgcontrol import build_structured, paper_example, solve_optimality, validate
from hdgcontrol.analysis import cost_functional
from hdgcontrol.basis import edge_basis, face_points
from hdgcontrol.hdg import DofMap, SolutionFields, optimality_residual

data = paper_example()
mesh = build_structured(data.length, 16)
print(validate(data, mesh))

# %%
# Static condensation leaves only face unknowns in the global system.
sol = solve_optimality(mesh, data, k=1)
print("J(u_h) =", cost_functional(sol, mesh, data))
print("optimality residual:", optimality_residual(sol, mesh, data, relative=True))

# %%
# The control along the bottom edge, sampled at face midpoints. It is largest
# near the corner where the target state is singular.
bf = mesh.boundary_faces
mid = face_points(mesh, bf, np.array([0.5]))[:, 0]
u_mid = sol.u @ edge_basis(2).values(np.array([0.5]))[0]
bottom = np.isclose(mid[:, 1], 0.0)
order = np.argsort(mid[bottom, 0])
for x, u in zip(mid[bottom, 0][order], u_mid[bottom][order]):
    print(f"x = {x:.4f}   u = {u:.4f}")

# %%
# Doing nothing costs more than the optimal control.
zero = SolutionFields.zeros(DofMap(mesh, 1))
print("J(0)   =", cost_functional(zero, mesh, data))
