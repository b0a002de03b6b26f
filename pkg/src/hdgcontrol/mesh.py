"""Structured triangulations of a square and their nested refinements.

Every cell of the uniform ``n x n`` grid over ``[0, L]^2`` is split along the
lower-left to upper-right diagonal.  Faces carry a global orientation from the
lower-indexed vertex to the higher-indexed one; trace unknowns are always
parameterized in that direction.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangulation with face connectivity.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counterclockwise
    faces : (nf, 2) int array, ``faces[:, 0] < faces[:, 1]``
    face_elements : (nf, 2) int array, second entry ``-1`` on the boundary
    boundary : (nf,) bool array
    element_faces : (nt, 3) int array; local face ``j`` joins local
        vertices ``j`` and ``j + 1 (mod 3)``
    diameters : (nt,) float array, element diameters ``h_K``
    n : int, subdivision count
    length : float, side length of the square
    """

    vertices: np.ndarray
    triangles: np.ndarray
    faces: np.ndarray
    face_elements: np.ndarray
    boundary: np.ndarray
    element_faces: np.ndarray
    diameters: np.ndarray
    n: int
    length: float

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_elements(self):
        return len(self.triangles)

    @property
    def num_faces(self):
        return len(self.faces)

    @property
    def interior_faces(self):
        return np.flatnonzero(~self.boundary)

    @property
    def boundary_faces(self):
        return np.flatnonzero(self.boundary)

    @property
    def h(self):
        """Global mesh size, the largest element diameter."""
        return float(self.diameters.max())

    @property
    def areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def face_lengths(self):
        d = self.vertices[self.faces[:, 1]] - self.vertices[self.faces[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @property
    def centroids(self):
        return self.vertices[self.triangles].mean(axis=1)

    def local_face_index(self, face, element):
        hits = np.flatnonzero(self.element_faces[element] == face)
        if hits.size == 0:
            raise ValueError(f"face {face} is not adjacent to element {element}")
        return int(hits[0])

    def locate(self, points):
        """Index of the element containing each point (ties broken downward)."""
        points = np.atleast_2d(points)
        c = self.length / self.n
        s = points / c
        i = np.clip(np.floor(s[:, 0]).astype(int), 0, self.n - 1)
        j = np.clip(np.floor(s[:, 1]).astype(int), 0, self.n - 1)
        fx = s[:, 0] - i
        fy = s[:, 1] - j
        upper = fy > fx
        return 2 * (j * self.n + i) + upper.astype(int)


def build_structured(length, n):
    """Uniform triangulation of ``[0, length]^2`` with ``n`` cells per side."""
    if int(n) != n or n < 1:
        raise ValueError(f"subdivision count must be a positive integer, got {n!r}")
    if not length > 0:
        raise ValueError(f"domain length must be positive, got {length!r}")
    n = int(n)
    length = float(length)

    t = np.linspace(0.0, length, n + 1)
    X, Y = np.meshgrid(t, t)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    v00 = (j * (n + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + n + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    local = np.stack([triangles, np.roll(triangles, -1, axis=1)], axis=-1)
    edges = np.sort(local.reshape(-1, 2), axis=1)
    faces, inverse = np.unique(edges, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    element_faces = inverse.reshape(-1, 3)

    owner = np.repeat(np.arange(len(triangles)), 3)
    order = np.argsort(inverse, kind="stable")
    counts = np.bincount(inverse, minlength=len(faces))
    first = np.concatenate([[0], np.cumsum(counts)[:-1]])
    face_elements = np.full((len(faces), 2), -1, dtype=np.int64)
    face_elements[:, 0] = owner[order[first]]
    two = counts == 2
    face_elements[two, 1] = owner[order[first[two] + 1]]
    boundary = counts == 1

    diameters = np.full(len(triangles), np.sqrt(2.0) * length / n)
    return Mesh(
        vertices=vertices,
        triangles=triangles,
        faces=faces,
        face_elements=face_elements,
        boundary=boundary,
        element_faces=element_faces,
        diameters=diameters,
        n=n,
        length=length,
    )


def refine(mesh):
    """Uniformly refine ``mesh``.

    Returns
    -------
    fine : Mesh
        ``build_structured(L, 2 n)``.
    parent : (nt_fine,) int array
        Coarse element containing each fine element.
    face_parent : (nf_fine,) int array
        Coarse boundary face containing each fine boundary face, ``-1`` for
        fine interior faces.
    """
    fine = build_structured(mesh.length, 2 * mesh.n)
    parent = mesh.locate(fine.centroids)
    face_parent = _boundary_face_parent(mesh, fine)
    return fine, parent, face_parent


def _boundary_face_parent(coarse, fine):
    out = np.full(fine.num_faces, -1, dtype=np.int64)
    bf = fine.boundary_faces
    mid = fine.vertices[fine.faces[bf]].mean(axis=1)
    elem = coarse.locate(mid)
    # the boundary face of the coarse element nearest to the midpoint
    best = np.full(len(bf), -1, dtype=np.int64)
    best_dist = np.full(len(bf), np.inf)
    for j in range(3):
        cf = coarse.element_faces[elem, j]
        a = coarse.vertices[coarse.faces[cf, 0]]
        b = coarse.vertices[coarse.faces[cf, 1]]
        d = b - a
        t = np.clip(np.einsum("ij,ij->i", mid - a, d) / np.einsum("ij,ij->i", d, d), 0, 1)
        dist = np.linalg.norm(a + t[:, None] * d - mid, axis=1)
        ok = coarse.boundary[cf] & (dist < best_dist)
        best[ok] = cf[ok]
        best_dist[ok] = dist[ok]
    out[bf] = best
    return out


def face_geometry(mesh, face, element):
    """Unit outward normal of ``element`` on ``face`` and the face length."""
    j = mesh.local_face_index(face, element)
    tri = mesh.triangles[element]
    a = mesh.vertices[tri[j]]
    b = mesh.vertices[tri[(j + 1) % 3]]
    d = b - a
    ell = float(np.hypot(*d))
    return np.array([d[1], -d[0]]) / ell, ell


def outward_normals(mesh):
    """(nt, 3, 2) unit outward normals and (nt, 3) lengths of all local faces."""
    p = mesh.vertices[mesh.triangles]
    d = np.roll(p, -1, axis=1) - p
    ell = np.hypot(d[..., 0], d[..., 1])
    nrm = np.stack([d[..., 1], -d[..., 0]], axis=-1) / ell[..., None]
    return nrm, ell


@dataclass
class MeshHierarchy:
    """Nested sequence of structured meshes with parent links.

    ``parents[j]`` maps elements of level ``j + 1`` to level ``j``;
    ``face_parents[j]`` does the same for boundary faces.
    """

    levels: list = field(default_factory=list)
    parents: list = field(default_factory=list)
    face_parents: list = field(default_factory=list)

    @classmethod
    def from_sizes(cls, length, sizes):
        sizes = sorted(int(s) for s in sizes)
        hier = cls([build_structured(length, sizes[0])])
        for target in sizes[1:]:
            if target % hier.levels[-1].n or (target // hier.levels[-1].n) & (
                target // hier.levels[-1].n - 1
            ):
                raise ValueError(f"level sizes must be nested by factors of two: {sizes}")
            while hier.levels[-1].n < target:
                hier.push_refinement()
        return hier

    def push_refinement(self):
        fine, parent, face_parent = refine(self.levels[-1])
        self.levels.append(fine)
        self.parents.append(parent)
        self.face_parents.append(face_parent)
        return fine

    def level_of(self, n):
        for i, m in enumerate(self.levels):
            if m.n == n:
                return i
        raise KeyError(n)

    def ancestor_map(self, coarse, fine):
        """Element map from level ``fine`` to level ``coarse``."""
        idx = np.arange(self.levels[fine].num_elements)
        for j in range(fine - 1, coarse - 1, -1):
            idx = self.parents[j][idx]
        return idx

    def boundary_ancestor_map(self, coarse, fine):
        out = np.where(self.levels[fine].boundary, np.arange(self.levels[fine].num_faces), -1)
        for j in range(fine - 1, coarse - 1, -1):
            out = np.where(out >= 0, self.face_parents[j][np.maximum(out, 0)], -1)
        return out


def nested_maps(coarse, fine):
    """Element and boundary-face maps from ``fine`` to ``coarse`` by geometry."""
    if fine.n % coarse.n or not np.isclose(fine.length, coarse.length):
        raise ValueError("meshes are not nested")
    return coarse.locate(fine.centroids), _boundary_face_parent(coarse, fine)


def write_mesh(mesh, path):
    """Plain-text dump with VERTICES, TRIANGLES and FACES sections."""
    with open(path, "w") as fh:
        fh.write(f"VERTICES {mesh.num_vertices}\n")
        for i, (x, y) in enumerate(mesh.vertices):
            fh.write(f"{i} {x:.17g} {y:.17g}\n")
        fh.write(f"TRIANGLES {mesh.num_elements}\n")
        for i, (a, b, c) in enumerate(mesh.triangles):
            fh.write(f"{i} {a} {b} {c}\n")
        fh.write(f"FACES {mesh.num_faces}\n")
        for i, ((a, b), flag) in enumerate(zip(mesh.faces, mesh.boundary)):
            fh.write(f"{i} {a} {b} {int(flag)}\n")


def read_mesh_sections(path):
    """Parse a mesh dump back into its three integer/float tables."""
    sections = {}
    current = None
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] in ("VERTICES", "TRIANGLES", "FACES"):
                current = parts[0]
                sections[current] = []
                continue
            sections[current].append([float(p) for p in parts[1:]])
    return {k: np.array(v) for k, v in sections.items()}
