"""Global assembly, static condensation and the one-shot solvers."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .. import linalg
from ..basis import project_trace_all
from ..problem import require_valid
from .dofs import DofMap, SolutionFields
from .local import ElementTables, LocalBlocks


class CondensationFailure(RuntimeError):
    def __init__(self, element):
        self.element = element
        super().__init__(f"local block of element {element} is singular")


def _blocks(mesh, data, k, h_mode, quad_degree=None, check=True):
    if check:
        require_valid(data, mesh)
    dofmap = DofMap(mesh, k)
    tables = ElementTables(mesh, k, quad_degree)
    return dofmap, tables, LocalBlocks(tables, data, h_mode)


def _trace_dofs(dofmap):
    """(nt, 6 nm) skeleton index of each local trace unknown (-1 if absent)."""
    nt = dofmap.num_elements
    s = dofmap.state_trace_dofs().reshape(nt, -1)
    a = dofmap.adjoint_trace_dofs().reshape(nt, -1)
    return np.concatenate([s, a], axis=1)


def _coo(rows, cols, vals, shape):
    rows = np.broadcast_to(rows, vals.shape).ravel()
    cols = np.broadcast_to(cols, vals.shape).ravel()
    vals = vals.ravel()
    keep = (rows >= 0) & (cols >= 0) & (vals != 0.0)
    return sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=shape)


def assemble_monolithic(mesh, data, k, h_mode="local", quad_degree=None, check=True):
    """Sparse matrix and load of the full coupled system.

    Returns ``(A, b, dofmap)``; unknowns are laid out by ``DofMap``.  Invalid
    problem data is refused unless ``check=False``.
    """
    dofmap, _, blk = _blocks(mesh, data, k, h_mode, quad_degree, check)
    return _monolithic_from_blocks(dofmap, blk) + (dofmap,)


def _monolithic_from_blocks(dofmap, blk):
    N = dofmap.n_total
    el = dofmap.element_dofs()
    tr = _trace_dofs(dofmap)
    tr_g = np.where(tr >= 0, tr + dofmap.n_interior, -1)
    A = _coo(el[:, :, None], el[:, None, :], blk.A, (N, N))
    A = A + _coo(el[:, :, None], tr_g[:, None, :], blk.trace_columns(), (N, N))
    A = A + _coo(tr_g[:, :, None], el[:, None, :], blk.trace_rows(), (N, N))
    A = A + _coo(tr_g[:, :, None], tr_g[:, None, :], blk.trace_diagonal(), (N, N))
    b = np.zeros(N)
    b[: dofmap.n_interior] = blk.F.ravel()
    A.sort_indices()
    return A.tocsr(), b


@dataclass
class CondensedSystem:
    """Skeleton system plus what is needed to recover interior unknowns.

    ``local_solution`` holds ``A_K^{-1} [B_K | F_K]`` for every element, so
    recovery is a batched matrix-vector product.
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    dofmap: DofMap
    trace_dofs: np.ndarray
    local_solution: np.ndarray

    def recover_interior(self, skeleton):
        lam = np.where(self.trace_dofs >= 0, skeleton[np.maximum(self.trace_dofs, 0)], 0.0)
        W = self.local_solution
        x = W[:, :, -1] - np.einsum("eij,ej->ei", W[:, :, :-1], lam)
        return x.ravel()


def _local_solve(A, rhs):
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        for e in range(len(A)):
            if np.linalg.matrix_rank(A[e]) < A.shape[1]:
                raise CondensationFailure(e) from None
        raise


def condense(dofmap, A, Bt, Ct, D, F, trace_dofs, n_skeleton):
    """Eliminate element unknowns from the per-element systems.

    ``A x + Bt lam = F`` locally; ``Ct x + D lam`` contributes to the
    skeleton equations indexed by ``trace_dofs``.
    """
    W = _local_solve(A, np.concatenate([Bt, F[:, :, None]], axis=2))
    S_loc = D - np.einsum("eti,eij->etj", Ct, W[:, :, :-1])
    g_loc = -np.einsum("eti,ei->et", Ct, W[:, :, -1])
    S = _coo(trace_dofs[:, :, None], trace_dofs[:, None, :], S_loc, (n_skeleton,) * 2)
    keep = trace_dofs >= 0
    g = np.bincount(trace_dofs[keep], weights=g_loc[keep], minlength=n_skeleton)
    S.sort_indices()
    return CondensedSystem(S.tocsr(), g, dofmap, trace_dofs, W)


def assemble_condensed(mesh, data, k, h_mode="local", quad_degree=None):
    """Statically condensed skeleton system in (yhat, zhat, u)."""
    dofmap, _, blk = _blocks(mesh, data, k, h_mode, quad_degree)
    return _condensed_from_blocks(dofmap, blk)


def _condensed_from_blocks(dofmap, blk):
    return condense(
        dofmap,
        blk.A,
        blk.trace_columns(),
        blk.trace_rows(),
        blk.trace_diagonal(),
        blk.F,
        _trace_dofs(dofmap),
        dofmap.n_skeleton,
    )


def solve_optimality(mesh, data, k, strategy="condensed", h_mode="local", quad_degree=None):
    """Solve the discrete optimality system; returns ``SolutionFields``."""
    dofmap, _, blk = _blocks(mesh, data, k, h_mode, quad_degree)
    if strategy == "monolithic":
        A, b = _monolithic_from_blocks(dofmap, blk)
        x = linalg.factor_and_solve(A, b)
        return SolutionFields.from_vector(dofmap, x)
    if strategy == "condensed":
        cs = _condensed_from_blocks(dofmap, blk)
        del blk  # element blocks are not needed during the factorization
        lam = linalg.factor_and_solve(cs.matrix, cs.rhs)
        return SolutionFields.from_vectors(dofmap, cs.recover_interior(lam), lam)
    raise ValueError(f"strategy must be 'monolithic' or 'condensed', got {strategy!r}")


@dataclass
class ForwardSolution:
    q: np.ndarray
    y: np.ndarray
    yhat: np.ndarray
    u: np.ndarray
    k: int


def solve_forward(mesh, data, g, k, h_mode="local", quad_degree=None):
    """State equation alone, with Dirichlet data ``P_M g`` in place of ``u``.

    Returns a ``ForwardSolution`` holding ``q`` (nt, 2, nk), ``y`` (nt, nw),
    ``yhat`` (n_interior_faces, nm) and the projected boundary data ``u``.
    """
    dofmap, _, blk = _blocks(mesh, data, k, h_mode, quad_degree)
    d = dofmap
    Q, Y, _, _ = blk.slices
    state = np.r_[np.arange(Q.start, Q.stop), np.arange(Y.start, Y.stop)]
    nt, nm = d.num_elements, d.nm

    u = project_trace_all(g, mesh, d.boundary_faces, k + 1)
    sdofs = d.state_trace_dofs()
    is_u = sdofs >= d.u_offset
    uval = np.where(is_u, u.ravel()[np.maximum(sdofs - d.u_offset, 0)], 0.0)

    A = blk.A[:, state][:, :, state]
    Bt = blk.Bs[:, :, state]
    F = blk.F[:, state] - np.einsum("efim,efm->ei", Bt, uval)
    Bt = np.moveaxis(Bt, 1, 2).reshape(nt, len(state), -1)
    Ct = blk.Cs[:, :, :, state].reshape(nt, -1, len(state))
    D = np.zeros((nt, 3 * nm, 3 * nm))
    for f in range(3):
        D[:, f * nm:(f + 1) * nm, f * nm:(f + 1) * nm] = blk.Ds[:, f]
    tr = np.where(is_u, -1, sdofs).reshape(nt, -1)
    cs = condense(d, A, Bt, Ct, D, F, tr, d.num_interior_faces * nm)
    lam = linalg.factor_and_solve(cs.matrix, cs.rhs)
    x = cs.recover_interior(lam).reshape(nt, -1)
    nq = Q.stop
    return ForwardSolution(
        q=x[:, :nq].reshape(nt, 2, d.nk),
        y=x[:, nq:],
        yhat=lam.reshape(-1, nm),
        u=u,
        k=k,
    )
