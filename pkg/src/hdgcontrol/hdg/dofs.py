"""Degree-of-freedom layout and solution containers."""

from dataclasses import dataclass

import numpy as np

from ..basis import num_functions

SUPPORTED_DEGREES = (0, 1, 2)


class UnsupportedDegree(ValueError):
    pass


class DofMap:
    """Unknown layout for polynomial degree ``k``.

    Element-interior block first, ``[q_x, q_y, y, p_x, p_y, z]`` per element
    (fluxes in P^k, scalars in P^{k+1}).  The skeleton block follows:
    all interior-face ``yhat``, then all interior-face ``zhat``, then the
    boundary control ``u``, each in P^{k+1} of the face.
    """

    def __init__(self, mesh, k):
        if k not in SUPPORTED_DEGREES:
            raise UnsupportedDegree(f"degree k={k!r} not in {SUPPORTED_DEGREES}")
        self.k = k
        self.nk = num_functions(k)
        self.nw = num_functions(k + 1)
        self.nm = k + 2
        self.ni = 4 * self.nk + 2 * self.nw

        self.num_elements = mesh.num_elements
        self.interior_faces = mesh.interior_faces
        self.boundary_faces = mesh.boundary_faces
        self.num_interior_faces = len(self.interior_faces)
        self.num_boundary_faces = len(self.boundary_faces)

        self.face_to_interior = np.full(mesh.num_faces, -1, dtype=np.int64)
        self.face_to_interior[self.interior_faces] = np.arange(self.num_interior_faces)
        self.face_to_boundary = np.full(mesh.num_faces, -1, dtype=np.int64)
        self.face_to_boundary[self.boundary_faces] = np.arange(self.num_boundary_faces)

        nk, nw = self.nk, self.nw
        self.q = slice(0, 2 * nk)
        self.y = slice(2 * nk, 2 * nk + nw)
        self.p = slice(2 * nk + nw, 4 * nk + nw)
        self.z = slice(4 * nk + nw, 4 * nk + 2 * nw)

        self.n_interior = self.num_elements * self.ni
        self.yhat_offset = 0
        self.zhat_offset = self.num_interior_faces * self.nm
        self.u_offset = 2 * self.num_interior_faces * self.nm
        self.n_skeleton = self.u_offset + self.num_boundary_faces * self.nm
        self.n_total = self.n_interior + self.n_skeleton

        self._element_faces = mesh.element_faces

    def element_dofs(self):
        """(nt, ni) global indices of the element-interior unknowns."""
        return np.arange(self.n_interior).reshape(self.num_elements, self.ni)

    def state_trace_dofs(self):
        """(nt, 3, nm) skeleton indices of ``yhat`` or ``u`` on each local face."""
        ef = self._element_faces
        ii = self.face_to_interior[ef]
        bi = self.face_to_boundary[ef]
        m = np.arange(self.nm)
        yh = self.yhat_offset + ii[..., None] * self.nm + m
        uu = self.u_offset + bi[..., None] * self.nm + m
        return np.where((ii >= 0)[..., None], yh, uu)

    def adjoint_trace_dofs(self):
        """(nt, 3, nm) skeleton indices of ``zhat``; -1 on boundary faces."""
        ii = self.face_to_interior[self._element_faces]
        idx = self.zhat_offset + ii[..., None] * self.nm + np.arange(self.nm)
        return np.where((ii >= 0)[..., None], idx, -1)

    def __repr__(self):
        return (
            f"DofMap(k={self.k}, interior={self.n_interior}, "
            f"skeleton={self.n_skeleton}, total={self.n_total})"
        )


def build_dof_map(mesh, k):
    return DofMap(mesh, k)


@dataclass
class SolutionFields:
    """Coefficient arrays of a discrete optimality-system solution.

    ``q, p``: (nt, 2, nk); ``y, z``: (nt, nw); ``yhat, zhat``: (n_interior_faces,
    nm); ``u``: (n_boundary_faces, nm).
    """

    q: np.ndarray
    p: np.ndarray
    y: np.ndarray
    z: np.ndarray
    yhat: np.ndarray
    zhat: np.ndarray
    u: np.ndarray
    k: int

    @classmethod
    def zeros(cls, dofmap):
        d = dofmap
        nt, ni_, nb = d.num_elements, d.num_interior_faces, d.num_boundary_faces
        return cls(
            q=np.zeros((nt, 2, d.nk)),
            p=np.zeros((nt, 2, d.nk)),
            y=np.zeros((nt, d.nw)),
            z=np.zeros((nt, d.nw)),
            yhat=np.zeros((ni_, d.nm)),
            zhat=np.zeros((ni_, d.nm)),
            u=np.zeros((nb, d.nm)),
            k=d.k,
        )

    @classmethod
    def from_vectors(cls, dofmap, interior, skeleton):
        d = dofmap
        X = np.asarray(interior).reshape(d.num_elements, d.ni)
        s = np.asarray(skeleton)
        return cls(
            q=X[:, d.q].reshape(-1, 2, d.nk).copy(),
            p=X[:, d.p].reshape(-1, 2, d.nk).copy(),
            y=X[:, d.y].copy(),
            z=X[:, d.z].copy(),
            yhat=s[d.yhat_offset:d.zhat_offset].reshape(-1, d.nm).copy(),
            zhat=s[d.zhat_offset:d.u_offset].reshape(-1, d.nm).copy(),
            u=s[d.u_offset:].reshape(-1, d.nm).copy(),
            k=d.k,
        )

    @classmethod
    def from_vector(cls, dofmap, x):
        return cls.from_vectors(dofmap, x[:dofmap.n_interior], x[dofmap.n_interior:])

    def interior_vector(self):
        nt = len(self.y)
        return np.concatenate(
            [self.q.reshape(nt, -1), self.y, self.p.reshape(nt, -1), self.z], axis=1
        ).ravel()

    def skeleton_vector(self):
        return np.concatenate([self.yhat.ravel(), self.zhat.ravel(), self.u.ravel()])

    def to_vector(self):
        return np.concatenate([self.interior_vector(), self.skeleton_vector()])

    def state(self):
        return DiscreteTuple(self.q, self.y, self.yhat)

    def adjoint(self):
        return DiscreteTuple(self.p, self.z, self.zhat)

    def max_abs(self):
        return max(float(np.max(np.abs(a), initial=0.0)) for a in
                   (self.q, self.p, self.y, self.z, self.yhat, self.zhat, self.u))


@dataclass
class DiscreteTuple:
    """One (flux, scalar, interior trace) triple."""

    v: np.ndarray
    w: np.ndarray
    mu: np.ndarray

    def __add__(self, other):
        return DiscreteTuple(self.v + other.v, self.w + other.w, self.mu + other.mu)

    def __rmul__(self, c):
        return DiscreteTuple(c * self.v, c * self.w, c * self.mu)

    def __neg__(self):
        return DiscreteTuple(-self.v, -self.w, -self.mu)

    @classmethod
    def random(cls, dofmap, rng):
        d = dofmap
        return cls(
            v=rng.standard_normal((d.num_elements, 2, d.nk)),
            w=rng.standard_normal((d.num_elements, d.nw)),
            mu=rng.standard_normal((d.num_interior_faces, d.nm)),
        )
