"""Quadrature rules, orthonormal modal bases and L2 projections.

The reference triangle is ``{x, y >= 0, x + y <= 1}`` and the reference
segment is ``[0, 1]``.  Triangle rules are collapsed (Stroud) products of
Gauss-Jacobi and Gauss-Legendre points, so they exist for any degree and have
positive weights.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_QUADRATURE_DEGREE = 60
REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


class UnsupportedDegree(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self):
        return len(self.weights)


def _check_degree(degree):
    if int(degree) != degree or degree < 0 or degree > MAX_QUADRATURE_DEGREE:
        raise UnsupportedDegree(
            f"quadrature degree {degree!r} outside supported range 0..{MAX_QUADRATURE_DEGREE}"
        )
    return int(degree)


@lru_cache(maxsize=None)
def quadrature_edge(degree):
    """Gauss-Legendre rule on ``[0, 1]`` exact for polynomials of ``degree``."""
    degree = _check_degree(degree)
    m = degree // 2 + 1
    x, w = roots_legendre(m)
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w, degree)


@lru_cache(maxsize=None)
def quadrature_triangle(degree):
    """Collapsed Gauss rule on the reference triangle, exact to ``degree``."""
    degree = _check_degree(degree)
    m = degree // 2 + 1
    xa, wa = roots_jacobi(m, 1.0, 0.0)
    xb, wb = roots_legendre(m)
    u = 0.5 * (xa + 1.0)
    v = 0.5 * (xb + 1.0)
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(0.25 * wa, 0.5 * wb)
    pts = np.column_stack([U.ravel(), ((1.0 - U) * V).ravel()])
    return QuadratureRule(pts, W.ravel(), degree)


def subtriangle_rule(rule, corners):
    """Map a reference rule onto the sub-triangle with the given reference corners."""
    corners = np.asarray(corners, dtype=float)
    J = np.column_stack([corners[1] - corners[0], corners[2] - corners[0]])
    det = abs(np.linalg.det(J))
    return rule.points @ J.T + corners[0], rule.weights * det


@lru_cache(maxsize=None)
def graded_rule(degree, vertex=0, levels=48):
    """Composite rule geometrically refined toward one reference vertex.

    Each level halves the corner sub-triangle at ``vertex`` and integrates the
    remaining trapezoid with three copies of the base rule.  Intended for
    integrands with a weak point singularity at that vertex.
    """
    base = quadrature_triangle(degree)
    a = REF_VERTICES[vertex]
    b = REF_VERTICES[(vertex + 1) % 3]
    c = REF_VERTICES[(vertex + 2) % 3]
    pts, wts = [], []
    for _ in range(levels):
        ab = 0.5 * (a + b)
        ac = 0.5 * (a + c)
        bc = 0.5 * (b + c)
        for tri in ((ab, b, bc), (ab, bc, ac), (ac, bc, c)):
            p, w = subtriangle_rule(base, tri)
            pts.append(p)
            wts.append(w)
        b, c = ab, ac
    p, w = subtriangle_rule(base, (a, b, c))
    pts.append(p)
    wts.append(w)
    return QuadratureRule(np.vstack(pts), np.concatenate(wts), degree)


def num_functions(degree):
    return (degree + 1) * (degree + 2) // 2


def _exponents(degree):
    return [(d - j, j) for d in range(degree + 1) for j in range(d + 1)]


def _monomials(points, exps):
    x = points[..., 0:1]
    y = points[..., 1:2]
    a = np.array([e[0] for e in exps])
    b = np.array([e[1] for e in exps])
    return x**a * y**b


def _monomial_gradients(points, exps):
    x = points[..., 0:1]
    y = points[..., 1:2]
    a = np.array([e[0] for e in exps])
    b = np.array([e[1] for e in exps])
    dx = np.where(a > 0, a * x ** np.maximum(a - 1, 0) * y**b, 0.0)
    dy = np.where(b > 0, b * x**a * y ** np.maximum(b - 1, 0), 0.0)
    return np.stack([dx, dy], axis=-1)


def _monomial_moment(a, b):
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


class TriBasis:
    """L2-orthonormal basis of P^k on the reference triangle.

    Built by Cholesky orthonormalization of the monomials against their exact
    Gram matrix, so ``phi = monomials @ coeffs``.
    """

    def __init__(self, degree):
        if degree < 0:
            raise ValueError("degree must be non-negative")
        self.degree = int(degree)
        self.exponents = _exponents(self.degree)
        self.size = len(self.exponents)
        G = np.array(
            [[_monomial_moment(a1 + a2, b1 + b2) for (a2, b2) in self.exponents]
             for (a1, b1) in self.exponents]
        )
        L = np.linalg.cholesky(G)
        self.coeffs = np.linalg.inv(L).T

    def values(self, points):
        return _monomials(np.asarray(points, dtype=float), self.exponents) @ self.coeffs

    def gradients(self, points):
        g = _monomial_gradients(np.asarray(points, dtype=float), self.exponents)
        return np.einsum("...mi,mj->...ji", g, self.coeffs)

    def __repr__(self):
        return f"TriBasis(degree={self.degree})"


class EdgeBasis:
    """Scaled shifted Legendre polynomials, orthonormal on ``[0, 1]``."""

    def __init__(self, degree):
        if degree < 0:
            raise ValueError("degree must be non-negative")
        self.degree = int(degree)
        self.size = self.degree + 1

    def values(self, t):
        t = np.asarray(t, dtype=float)
        s = 2.0 * t - 1.0
        out = np.empty(t.shape + (self.size,))
        out[..., 0] = 1.0
        if self.size > 1:
            out[..., 1] = s
        for j in range(1, self.size - 1):
            out[..., j + 1] = ((2 * j + 1) * s * out[..., j] - j * out[..., j - 1]) / (j + 1)
        return out * np.sqrt(2 * np.arange(self.size) + 1.0)

    def __repr__(self):
        return f"EdgeBasis(degree={self.degree})"


@lru_cache(maxsize=None)
def tri_basis(degree):
    return TriBasis(degree)


@lru_cache(maxsize=None)
def edge_basis(degree):
    return EdgeBasis(degree)


def element_maps(mesh):
    """Affine maps ``x = v0 + J xi`` for all elements.

    Returns ``(v0, J, detJ, invJ)`` with shapes (nt, 2), (nt, 2, 2), (nt,),
    (nt, 2, 2).
    """
    p = mesh.vertices[mesh.triangles]
    J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    inv = np.empty_like(J)
    inv[:, 0, 0] = J[:, 1, 1]
    inv[:, 1, 1] = J[:, 0, 0]
    inv[:, 0, 1] = -J[:, 0, 1]
    inv[:, 1, 0] = -J[:, 1, 0]
    inv /= det[:, None, None]
    return p[:, 0], J, det, inv


def to_reference(mesh, elements, points):
    """Reference coordinates of physical ``points`` inside ``elements``."""
    v0, _, _, inv = element_maps(mesh)
    return np.einsum("eij,ej->ei", inv[elements], points - v0[elements])


def project_volume(f, mesh, element, degree, rule=None):
    """Coefficients of the L2(K) projection of ``f`` onto P^degree(K).

    ``f`` maps an (m, 2) array of physical points to m values.
    """
    basis = tri_basis(degree)
    rule = rule or quadrature_triangle(2 * degree + 6)
    v0, J, det, _ = element_maps(mesh)
    x = rule.points @ J[element].T + v0[element]
    phi = basis.values(rule.points)
    # orthonormal on the reference element; the mass matrix is |det J| I
    return (rule.weights * np.asarray(f(x), dtype=float)) @ phi


def project_volume_all(f, mesh, degree, rule=None):
    """L2 projection on every element; returns (nt, dim P^degree)."""
    basis = tri_basis(degree)
    rule = rule or quadrature_triangle(2 * degree + 6)
    v0, J, _, _ = element_maps(mesh)
    x = np.einsum("eij,qj->eqi", J, rule.points) + v0[:, None, :]
    vals = np.asarray(f(x.reshape(-1, 2)), dtype=float).reshape(x.shape[:2])
    return (vals * rule.weights) @ basis.values(rule.points)


def face_points(mesh, faces, t):
    """Physical points at parameters ``t`` along ``faces`` in global orientation."""
    a = mesh.vertices[mesh.faces[faces, 0]]
    b = mesh.vertices[mesh.faces[faces, 1]]
    return a[:, None, :] + np.asarray(t)[None, :, None] * (b - a)[:, None, :]


def project_trace(g, mesh, face, degree, rule=None):
    """Coefficients of the L2(e) projection of ``g`` onto P^degree(e)."""
    return project_trace_all(g, mesh, np.atleast_1d(face), degree, rule)[0]


def project_trace_all(g, mesh, faces, degree, rule=None):
    basis = edge_basis(degree)
    rule = rule or quadrature_edge(2 * degree + 6)
    x = face_points(mesh, faces, rule.points)
    vals = np.asarray(g(x.reshape(-1, 2)), dtype=float).reshape(x.shape[:2])
    # orthonormal on [0, 1]; the face mass matrix is |e| I
    return (vals * rule.weights) @ basis.values(rule.points)

