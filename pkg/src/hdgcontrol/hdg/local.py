"""Element-local quadrature tables and HDG element matrices.

All element quantities are computed for every element at once; arrays carry
a leading element axis ``e`` and, for face quantities, a local-face axis
``f`` (local face ``f`` joins local vertices ``f`` and ``f + 1``).
"""

import numpy as np

from ..basis import (
    REF_VERTICES,
    edge_basis,
    element_maps,
    graded_rule,
    num_functions,
    quadrature_edge,
    quadrature_triangle,
    tri_basis,
)
from ..mesh import outward_normals


def default_quadrature_degree(k):
    return 2 * (k + 2) + 2


class ElementTables:
    """Basis values at volume and face quadrature points of every element.

    Face points are laid out along each face's global orientation, so face
    ``q`` of two neighbouring elements refers to the same physical point.
    """

    def __init__(self, mesh, k, quad_degree=None):
        self.mesh = mesh
        self.k = k
        self.nk = num_functions(k)
        self.nw = num_functions(k + 1)
        self.nm = k + 2
        qd = quad_degree or default_quadrature_degree(k)
        self.quad_degree = qd

        self.vol = quadrature_triangle(qd)
        self.edge = quadrature_edge(qd)
        bk, bw, be = tri_basis(k), tri_basis(k + 1), edge_basis(k + 1)
        self.phi_k = bk.values(self.vol.points)
        self.phi_w = bw.values(self.vol.points)
        self.dphi_k = bk.gradients(self.vol.points)
        self.dphi_w = bw.gradients(self.vol.points)
        self.psi = be.values(self.edge.points)

        self.v0, self.J, det, self.invJ = element_maps(mesh)
        self.adet = np.abs(det)
        self.normals, self.lengths = outward_normals(mesh)

        tri = mesh.triangles
        self.flip = tri > np.roll(tri, -1, axis=1)
        t = self.edge.points
        ref = np.empty((2, 3, len(t), 2))
        for f in range(3):
            a, b = REF_VERTICES[f], REF_VERTICES[(f + 1) % 3]
            ref[0, f] = a + t[:, None] * (b - a)
            ref[1, f] = b + t[:, None] * (a - b)
        self.face_ref_points = ref
        fidx = np.arange(3)
        flip = self.flip.astype(int)
        self.phi_k_f = bk.values(ref)[flip, fidx]
        self.phi_w_f = bw.values(ref)[flip, fidx]
        self.fw = self.edge.weights * self.lengths[..., None]

    @property
    def num_elements(self):
        return self.mesh.num_elements

    def volume_points(self):
        """(nt, nqv, 2) physical quadrature points."""
        return np.einsum("eij,qj->eqi", self.J, self.vol.points) + self.v0[:, None, :]

    def face_points(self):
        """(nt, 3, nqf, 2) physical face quadrature points."""
        ref = self.face_ref_points[self.flip.astype(int), np.arange(3)]
        return np.einsum("eij,efqj->efqi", self.J, ref) + self.v0[:, None, None, :]

    def inverse_h(self, h_mode="local"):
        """(nt, 3) stabilization size ``1/h`` per local face."""
        if h_mode == "local":
            return 1.0 / self.lengths
        if h_mode == "global":
            return np.full_like(self.lengths, 1.0 / self.mesh.h)
        raise ValueError(f"h_mode must be 'local' or 'global', got {h_mode!r}")

    def beta_n(self, beta):
        """(nt, 3, nqf) beta . n at face quadrature points."""
        bn = self.normals @ np.asarray(beta, dtype=float)
        return np.broadcast_to(bn[..., None], self.fw.shape).copy()

    def load(self, func, degree_basis="w", singular_point=None):
        """``(func, phi_i)_K`` for all elements; (nt, nw)."""
        phi = self.phi_w
        vals = func(self.volume_points().reshape(-1, 2)).reshape(self.num_elements, -1)
        out = self.adet[:, None] * ((vals * self.vol.weights) @ phi)
        for e, vertex in singular_elements(self.mesh, singular_point):
            rule = graded_rule(self.quad_degree, vertex)
            x = rule.points @ self.J[e].T + self.v0[e]
            out[e] = self.adet[e] * ((func(x) * rule.weights) @ tri_basis(self.k + 1).values(rule.points))
        return out


def singular_elements(mesh, point):
    """(element, local vertex) pairs whose vertex coincides with ``point``."""
    if point is None:
        return []
    p = np.asarray(point, dtype=float)
    d = np.linalg.norm(mesh.vertices - p, axis=1)
    hits = np.flatnonzero(d <= 1e-12 * max(mesh.length, 1.0))
    out = []
    for v in hits:
        els, loc = np.nonzero(mesh.triangles == v)
        out.extend(zip(els.tolist(), loc.tolist()))
    return out


class LocalBlocks:
    """Element matrices of the coupled system, rows ordered (r1, w1, r2, w2).

    Attributes are batched over elements:

    ``A``      (nt, ni, ni)        interior-interior coupling
    ``Bs``     (nt, 3, ni, nm)     interior rows x state trace (yhat or u)
    ``Ba``     (nt, 3, ni, nm)     interior rows x adjoint trace (zhat)
    ``Cs``     (nt, 3, nm, ni)     state-trace rows x interior columns
    ``Ca``     (nt, 3, nm, ni)     adjoint-trace rows x interior columns
    ``Ds``     (nt, 3, nm, nm)     state-trace rows x state trace
    ``Da``     (nt, 3, nm, nm)     adjoint-trace rows x adjoint trace
    ``F``      (nt, ni)            element load

    State-trace rows hold the flux-continuity equation on interior faces and
    the optimality condition on boundary faces.  Interior-face continuity
    rows are written with the sign of the B1/B2 operators, i.e. negated
    relative to the usual "sum of numerical fluxes = 0" form.
    """

    def __init__(self, tables, data, h_mode="local", with_load=True):
        t = tables
        nk, nw, nm = t.nk, t.nw, t.nm
        nt = t.num_elements
        self.nk, self.nw, self.nm = nk, nw, nm
        self.ni = ni = 4 * nk + 2 * nw
        Q = slice(0, 2 * nk)
        Y = slice(2 * nk, 2 * nk + nw)
        P = slice(2 * nk + nw, 4 * nk + nw)
        Z = slice(4 * nk + nw, ni)
        self.slices = (Q, Y, P, Z)

        beta = data.beta_vec
        w = t.vol.weights
        # reference-element derivative couplings
        Dhat = np.einsum("q,qi,qjd->dij", w, t.phi_w, t.dphi_k)
        Chat = np.einsum("q,qj,qid->dij", w, t.phi_w, t.dphi_w)
        B = np.einsum("e,edc,dij->eicj", t.adet, t.invJ, Dhat).reshape(nt, nw, 2 * nk)
        bhat = np.einsum("edc,c->ed", t.invJ, beta)
        C = t.adet[:, None, None] * np.einsum("ed,dij->eij", bhat, Chat)
        eye_k = np.eye(2 * nk)
        eye_w = np.eye(nw)
        Mq = t.adet[:, None, None] * eye_k
        Mw = t.adet[:, None, None] * eye_w

        hinv = t.inverse_h(h_mode)[..., None]
        bn = t.beta_n(beta)
        tau1 = data.tau1(bn)
        tau2 = np.full_like(bn, float(data.tau2))
        c1 = hinv + tau1
        c2 = hinv + tau2

        fw = t.fw
        phik, phiw, psi = t.phi_k_f, t.phi_w_f, t.psi
        Ek = np.einsum("efq,efqi,qm->efim", fw, phik, psi)
        E = (t.normals[:, :, :, None, None] * Ek[:, :, None]).reshape(nt, 3, 2 * nk, nm)

        def vv(c):
            return np.einsum("efq,efqi,efqj->eij", fw * c, phiw, phiw)

        def vt(c):
            return np.einsum("efq,efqi,qm->efim", fw * c, phiw, psi)

        def tt(c):
            return np.einsum("efq,qm,qn->efmn", fw * c, psi, psi)

        S1, S2 = vv(c1), vv(c2)
        F1 = vt(bn - c1)
        F2 = -vt(c2 + bn)
        G1 = np.swapaxes(vt(c1), -1, -2)
        G2 = np.swapaxes(vt(c2), -1, -2)
        H1 = tt(c1 - bn)
        H2 = tt(c2 + bn)
        Me = tt(np.ones_like(bn))

        A = np.zeros((nt, ni, ni))
        A[:, Q, Q] = Mq
        A[:, Q, Y] = -np.swapaxes(B, 1, 2)
        A[:, Y, Q] = B
        A[:, Y, Y] = -C - data.div_beta * Mw + S1
        A[:, P, P] = Mq
        A[:, P, Z] = -np.swapaxes(B, 1, 2)
        A[:, Z, Y] = -Mw
        A[:, Z, P] = B
        A[:, Z, Z] = C + S2
        self.A = A

        bnd = tables.mesh.boundary[tables.mesh.element_faces]
        self.boundary = bnd
        Et = np.swapaxes(E, -1, -2)

        Bs = np.zeros((nt, 3, ni, nm))
        Bs[:, :, Q] = E
        Bs[:, :, Y] = F1
        Ba = np.zeros((nt, 3, ni, nm))
        Ba[:, :, P] = E
        Ba[:, :, Z] = F2
        Ba[bnd] = 0.0
        self.Bs, self.Ba = Bs, Ba

        Cs = np.zeros((nt, 3, nm, ni))
        Cs[:, :, :, Q] = -Et
        Cs[:, :, :, Y] = -G1
        Cb = np.zeros((nt, 3, nm, ni))
        Cb[:, :, :, P] = Et
        Cb[:, :, :, Z] = G2
        self.Cs = np.where(bnd[..., None, None], Cb, Cs)
        Ca = np.zeros((nt, 3, nm, ni))
        Ca[:, :, :, P] = -Et
        Ca[:, :, :, Z] = -G2
        Ca[bnd] = 0.0
        self.Ca = Ca

        self.Ds = np.where(bnd[..., None, None], data.gamma * Me, H1)
        self.Da = np.where(bnd[..., None, None], 0.0, H2)

        self.F = np.zeros((nt, ni))
        if with_load:
            self.F[:, Y] = t.load(data.f)
            self.F[:, Z] = -t.load(data.y_d, singular_point=data.singular_point)

    def trace_columns(self):
        """(nt, ni, 6 nm) coupling to the six local traces [state f0..f2, adjoint f0..f2]."""
        nt = self.A.shape[0]
        Bs = np.moveaxis(self.Bs, 1, 2).reshape(nt, self.ni, -1)
        Ba = np.moveaxis(self.Ba, 1, 2).reshape(nt, self.ni, -1)
        return np.concatenate([Bs, Ba], axis=2)

    def trace_rows(self):
        nt = self.A.shape[0]
        return np.concatenate(
            [self.Cs.reshape(nt, -1, self.ni), self.Ca.reshape(nt, -1, self.ni)], axis=1
        )

    def trace_diagonal(self):
        """(nt, 6 nm, 6 nm) block-diagonal trace-trace coupling."""
        nt, nm = self.A.shape[0], self.nm
        D = np.zeros((nt, 6 * nm, 6 * nm))
        for f in range(3):
            s = slice(f * nm, (f + 1) * nm)
            a = slice((3 + f) * nm, (4 + f) * nm)
            D[:, s, s] = self.Ds[:, f]
            D[:, a, a] = self.Da[:, f]
        return D
