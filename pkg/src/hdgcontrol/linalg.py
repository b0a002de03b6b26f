"""Sparse direct solves backed by SuperLU.

Matrices are ``scipy.sparse`` CSR arrays with sorted, unique column indices.
The factorization uses partial pivoting (threshold 1) and the COLAMD
fill-reducing column ordering, both deterministic.
"""

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu


class SingularSystemError(RuntimeError):
    def __init__(self, message, pivot=None):
        self.pivot = pivot
        super().__init__(message)


def as_sparse(A):
    A = sp.csr_matrix(A, dtype=float)
    A.sum_duplicates()
    A.sort_indices()
    return A


def spmv(A, x):
    x = np.asarray(x, dtype=float)
    if A.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {A.shape}, vector {x.shape}")
    return A @ x


def _structural_check(A):
    rows = np.diff(A.indptr)
    empty = np.flatnonzero(rows == 0)
    if empty.size:
        raise SingularSystemError(f"row {empty[0]} is structurally zero", pivot=int(empty[0]))
    cols = np.bincount(A.indices, minlength=A.shape[1])
    empty = np.flatnonzero(cols == 0)
    if empty.size:
        raise SingularSystemError(f"column {empty[0]} is structurally zero", pivot=int(empty[0]))


def factor(A):
    """LU factorization object; raises ``SingularSystemError`` on breakdown."""
    A = as_sparse(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got {A.shape}")
    A.eliminate_zeros()
    _structural_check(A)
    try:
        lu = splu(A.tocsc(), permc_spec="COLAMD", diag_pivot_thresh=1.0)
    except RuntimeError as exc:
        raise SingularSystemError(f"factorization broke down: {exc}") from None
    d = np.abs(lu.U.diagonal())
    tiny = d <= np.finfo(float).eps * max(d.max(initial=0.0), 1.0) * 1e-3
    if tiny.any():
        j = int(np.flatnonzero(tiny)[0])
        raise SingularSystemError(f"numerically zero pivot at position {j}", pivot=j)
    return lu


def factor_and_solve(A, b):
    b = np.asarray(b, dtype=float)
    if A.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {A.shape}, rhs {b.shape}")
    x = factor(A).solve(b)
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("solution contains non-finite values")
    return x


def relative_residual(A, x, b):
    """``|A x - b| / (|A| |x| + |b|)`` with Frobenius matrix norm."""
    r = spmv(A, x) - b
    scale = sp.linalg.norm(A) * np.linalg.norm(x) + np.linalg.norm(b)
    return float(np.linalg.norm(r) / scale) if scale > 0 else float(np.linalg.norm(r))
