"""Direct quadrature evaluation of the HDG bilinear forms.

Nothing here touches the assembled matrices: fields are evaluated at
quadrature points and every term of the forms is integrated on its own.
This gives an independent route for checking the assembly and for the
energy and adjoint identities.
"""

import numpy as np

from .dofs import DiscreteTuple, SolutionFields
from .local import ElementTables


class FormContext:
    """Quadrature tables plus the face coefficients of one problem."""

    def __init__(self, mesh, data, k, h_mode="local", tables=None):
        self.mesh = mesh
        self.data = data
        self.k = k
        self.t = tables or ElementTables(mesh, k)
        t = self.t
        self.bnd = mesh.boundary[mesh.element_faces]
        self.interior = (~self.bnd)[..., None].astype(float)
        self.exterior = self.bnd[..., None].astype(float)
        hinv = t.inverse_h(h_mode)[..., None]
        self.bn = t.beta_n(data.beta_vec)
        self.c1 = hinv + data.tau1(self.bn)
        self.c2 = hinv + float(data.tau2)
        ef = mesh.element_faces
        self.ifidx = np.minimum(np.searchsorted(mesh.interior_faces, ef), len(mesh.interior_faces) - 1)
        self.bfidx = np.minimum(np.searchsorted(mesh.boundary_faces, ef), len(mesh.boundary_faces) - 1)

    # -- evaluation -----------------------------------------------------------
    def vol(self, g):
        """Integral over the mesh of values ``g`` given at volume points."""
        return float(np.einsum("e,q,eq->", self.t.adet, self.t.vol.weights, g))

    def face(self, g, mask=None):
        """Sum over element boundaries of ``g`` given at face points."""
        if mask is not None:
            g = g * mask
        return float(np.sum(self.t.fw * g))

    def flux(self, v):
        t = self.t
        val = np.einsum("eci,qi->eqc", v, t.phi_k)
        div = np.einsum("eci,qid,edc->eq", v, t.dphi_k, t.invJ)
        vn = np.einsum("efc,eci,efqi->efq", t.normals, v, t.phi_k_f)
        return val, div, vn

    def scalar(self, w):
        t = self.t
        val = w @ t.phi_w.T
        grad = np.einsum("ei,qid,edc->eqc", w, t.dphi_w, t.invJ)
        fval = np.einsum("ei,efqi->efq", w, t.phi_w_f)
        return val, grad, fval

    def trace(self, mu):
        """Interior-face trace values seen from each element; 0 on the boundary."""
        vals = (mu @ self.t.psi.T)[self.ifidx]
        return vals * self.interior

    def boundary_trace(self, u):
        vals = (u @ self.t.psi.T)[self.bfidx]
        return vals * self.exterior


def _ctx(mesh, data, k, h_mode, ctx):
    return ctx if ctx is not None else FormContext(mesh, data, k, h_mode)


def apply_B1(trial, test, mesh, data, k, h_mode="local", ctx=None):
    """Bilinear form of the discrete state equations."""
    c = _ctx(mesh, data, k, h_mode, ctx)
    v, dv, vn = c.flux(trial.v)
    w, _, wf = c.scalar(trial.w)
    mu = c.trace(trial.mu)
    r, dr, rn = c.flux(test.v)
    s, gs, sf = c.scalar(test.w)
    lam = c.trace(test.mu)
    beta = data.beta_vec
    vol = np.einsum("eqc,eqc->eq", v, r) - w * dr + dv * s - w * (gs @ beta) - data.div_beta * w * s
    fac = (
        mu * rn
        + (c.bn - c.c1) * mu * sf
        - (vn + c.bn * mu + c.c1 * (wf - mu)) * lam
    )
    return c.vol(vol) + c.face(fac, c.interior) + c.face(c.c1 * wf * sf)


def apply_B2(trial, test, mesh, data, k, h_mode="local", ctx=None):
    """Bilinear form of the discrete adjoint equations."""
    c = _ctx(mesh, data, k, h_mode, ctx)
    v, dv, vn = c.flux(trial.v)
    w, _, wf = c.scalar(trial.w)
    mu = c.trace(trial.mu)
    r, dr, rn = c.flux(test.v)
    s, gs, sf = c.scalar(test.w)
    lam = c.trace(test.mu)
    beta = data.beta_vec
    vol = np.einsum("eqc,eqc->eq", v, r) - w * dr + dv * s + w * (gs @ beta)
    fac = (
        mu * rn
        - (c.bn + c.c2) * mu * sf
        - (vn - c.bn * mu + c.c2 * (wf - mu)) * lam
    )
    return c.vol(vol) + c.face(fac, c.interior) + c.face(c.c2 * wf * sf)


def energy_B1(t, mesh, data, k, h_mode="local", ctx=None):
    """Closed form of ``B1(t, t)`` as a sum of (weighted) squares."""
    c = _ctx(mesh, data, k, h_mode, ctx)
    v, _, _ = c.flux(t.v)
    w, _, wf = c.scalar(t.w)
    mu = c.trace(t.mu)
    a = c.c1 - 0.5 * c.bn
    return (
        c.vol(np.einsum("eqc,eqc->eq", v, v) - 0.5 * data.div_beta * w * w)
        + c.face(a * (wf - mu) ** 2, c.interior)
        + c.face(a * wf**2, c.exterior)
    )


def energy_B2(t, mesh, data, k, h_mode="local", ctx=None):
    """Closed form of ``B2(t, t)``."""
    c = _ctx(mesh, data, k, h_mode, ctx)
    v, _, _ = c.flux(t.v)
    w, _, wf = c.scalar(t.w)
    mu = c.trace(t.mu)
    a = c.c2 + 0.5 * c.bn
    return (
        c.vol(np.einsum("eqc,eqc->eq", v, v) - 0.5 * data.div_beta * w * w)
        + c.face(a * (wf - mu) ** 2, c.interior)
        + c.face(a * wf**2, c.exterior)
    )


def adjoint_identity(state, adjoint, mesh, data, k, h_mode="local", ctx=None):
    """Returns the two terms whose sum vanishes when tau1 = tau2 + beta.n."""
    c = _ctx(mesh, data, k, h_mode, ctx)
    first = apply_B1(state, DiscreteTuple(adjoint.v, -adjoint.w, -adjoint.mu), mesh, data, k, ctx=c)
    second = apply_B2(adjoint, DiscreteTuple(-state.v, state.w, state.mu), mesh, data, k, ctx=c)
    return first, second


def apply_coupling(trial, test, mesh, data, k, h_mode="local", ctx=None):
    """Terms of the full system outside B1 and B2.

    Boundary control in the state equations, the state source in the adjoint
    equation, and the optimality condition tested with ``test.u``.
    """
    c = _ctx(mesh, data, k, h_mode, ctx)
    u = c.boundary_trace(trial.u)
    _, _, rn = c.flux(test.q)
    _, _, s1 = c.scalar(test.y)
    y, _, _ = c.scalar(trial.y)
    s2, _, _ = c.scalar(test.z)
    _, _, pn = c.flux(trial.p)
    _, _, zf = c.scalar(trial.z)
    mu3 = c.boundary_trace(test.u)
    out = c.face(u * rn + (c.bn - c.c1) * u * s1, c.exterior)
    out -= c.vol(y * s2)
    out += c.face((pn + c.c2 * zf + data.gamma * u) * mu3, c.exterior)
    return out


def apply_full(trial, test, mesh, data, k, h_mode="local", ctx=None):
    """``test^T A trial`` for the full coupled operator, by quadrature."""
    c = _ctx(mesh, data, k, h_mode, ctx)
    return (
        apply_B1(trial.state(), test.state(), mesh, data, k, ctx=c)
        + apply_B2(trial.adjoint(), test.adjoint(), mesh, data, k, ctx=c)
        + apply_coupling(trial, test, mesh, data, k, ctx=c)
    )


def optimality_residual(sol, mesh, data, h_mode="local", relative=False, ctx=None):
    """L2(boundary) norm of the optimality-condition residual functional.

    The functional ``mu -> <p.n + gamma u + (1/h + tau2) z, mu>`` is
    represented in the boundary trace space; with ``relative=True`` the norm
    is divided by the sum of the norms of its three parts.
    """
    c = _ctx(mesh, data, sol.k, h_mode, ctx)
    _, _, pn = c.flux(sol.p)
    _, _, zf = c.scalar(sol.z)
    u = c.boundary_trace(sol.u)
    psi = c.t.psi

    def rep_norm(g):
        r = np.einsum("efq,efq,qm->efm", c.t.fw * c.exterior, g, psi)
        return float(np.sqrt(np.sum(r**2 / c.t.lengths[..., None])))

    res = rep_norm(pn + data.gamma * u + c.c2 * zf)
    if not relative:
        return res
    scale = rep_norm(pn) + rep_norm(data.gamma * u) + rep_norm(c.c2 * zf)
    return res / scale if scale > 0 else res


def random_fields(dofmap, rng):
    d = dofmap
    return SolutionFields(
        q=rng.standard_normal((d.num_elements, 2, d.nk)),
        p=rng.standard_normal((d.num_elements, 2, d.nk)),
        y=rng.standard_normal((d.num_elements, d.nw)),
        z=rng.standard_normal((d.num_elements, d.nw)),
        yhat=rng.standard_normal((d.num_interior_faces, d.nm)),
        zhat=rng.standard_normal((d.num_interior_faces, d.nm)),
        u=rng.standard_normal((d.num_boundary_faces, d.nm)),
        k=d.k,
    )
