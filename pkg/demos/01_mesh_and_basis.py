"""Meshes, quadrature and projections
====================================

A short tour of the building blocks: the structured triangulation, its
refinement hierarchy, and the modal bases used for every field.
"""

# %%
# A structured mesh of [0, 1/8]^2 with n = 4 cells per side. Every cell is
# split along the same diagonal, so refinement is exactly nested.
import numpy as np

from hdgcontrol.basis import edge_basis, project_volume_all, quadrature_triangle, tri_basis
from hdgcontrol.mesh import MeshHierarchy, build_structured, face_geometry

mesh = build_structured(1 / 8, 4)
print(mesh.num_vertices, "vertices,", mesh.num_elements, "triangles,", mesh.num_faces, "faces")
print("boundary faces:", mesh.boundary.sum(), " h =", mesh.h)

# %%
# Outward normals: the two sides of an interior face see opposite normals.
f = mesh.interior_faces[0]
e0, e1 = mesh.face_elements[f]
print(face_geometry(mesh, f, e0), face_geometry(mesh, f, e1))

# %%
# A hierarchy n = 2, 4, 8 with element ancestry maps from the finest level.
hier = MeshHierarchy.from_sizes(1 / 8, [2, 8])
parent = hier.ancestor_map(0, 2)
print("fine elements per coarse element:", np.bincount(parent))

# %%
# The bases are orthonormal on the reference triangle / segment, so their
# Gram matrices are identities.
rule = quadrature_triangle(6)
phi = tri_basis(2).values(rule.points)
print("P2 Gram error:", np.abs((phi * rule.weights[:, None]).T @ phi - np.eye(6)).max())
t = np.linspace(0, 1, 3)
print("edge basis at t=0, 1/2, 1:\n", edge_basis(1).values(t))

# %%
# L2 projection of a smooth function onto piecewise quadratics.
c = project_volume_all(lambda x: np.exp(8 * x[:, 0]) * np.sin(8 * x[:, 1]), mesh, 2)
print("coefficient array:", c.shape)
