"""Error norms on nested meshes, the cost functional and convergence studies."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import csv
import io
import math

import numpy as np

from .basis import edge_basis, element_maps, graded_rule, quadrature_edge, quadrature_triangle, tri_basis
from .hdg import solve_forward, solve_optimality
from .hdg.local import singular_elements
from .mesh import MeshHierarchy, build_structured, nested_maps
from .problem import mms_forward_case, paper_example, zero_problem

FIELDS = ("q", "p", "y", "z", "u")


def error_quadrature_degree(k):
    return 2 * (k + 2) + 4


def _volume_values(coeffs, degree, mesh, elements, ref_points):
    """Values of a piecewise polynomial at per-element reference points.

    ``coeffs`` is (nt, nb) or (nt, 2, nb); ``ref_points`` is (m, nq, 2).
    """
    phi = tri_basis(degree).values(ref_points)
    c = coeffs[elements]
    if c.ndim == 2:
        return np.einsum("mb,mqb->mq", c, phi)
    return np.einsum("mcb,mqb->mqc", c, phi)


def _check_nested(coarse, fine):
    if fine.n % coarse.n or not math.isclose(fine.length, coarse.length) or (
        (fine.n // coarse.n) & (fine.n // coarse.n - 1)
    ):
        raise ValueError(f"mesh n={fine.n} is not a nested refinement of n={coarse.n}")


def l2_error_volume(coeffs, mesh, degree, reference=None, exact=None, parent=None, quad_degree=None):
    """L2(domain) norm of ``coarse - reference``.

    ``reference`` is ``(coeffs, mesh)`` of a nested finer solution; the
    coarse field is evaluated at the fine mesh's quadrature points through
    the element parent map.  Alternatively ``exact`` is a function of (m, 2)
    points returning (m,) or (m, 2) values.  ``degree`` is the polynomial
    degree of ``coeffs`` (and of the reference coefficients).
    """
    rule = quadrature_triangle(quad_degree or 2 * degree + 6)
    coeffs = np.asarray(coeffs, dtype=float)
    if reference is None:
        if exact is None:
            raise ValueError("either reference or exact is required")
        v0, J, det, _ = element_maps(mesh)
        x = np.einsum("eij,qj->eqi", J, rule.points) + v0[:, None, :]
        ex = np.asarray(exact(x.reshape(-1, 2))).reshape(x.shape[:2] + np.shape(coeffs)[1:-1])
        nt = mesh.num_elements
        ch = _volume_values(coeffs, degree, mesh, np.arange(nt), np.broadcast_to(rule.points, (nt,) + rule.points.shape))
        diff = ch - ex
        adet = np.abs(det)
    else:
        ref_coeffs, fine = reference
        _check_nested(mesh, fine)
        if parent is None:
            parent, _ = nested_maps(mesh, fine)
        v0f, Jf, detf, _ = element_maps(fine)
        x = np.einsum("eij,qj->eqi", Jf, rule.points) + v0f[:, None, :]
        if fine.n == mesh.n:
            xi = np.broadcast_to(rule.points, x.shape)
        else:
            v0c, _, _, invc = element_maps(mesh)
            xi = np.einsum("eij,eqj->eqi", invc[parent], x - v0c[parent][:, None, :])
        ch = _volume_values(coeffs, degree, mesh, parent, xi)
        nt = fine.num_elements
        fh = _volume_values(np.asarray(ref_coeffs, dtype=float), degree, fine, np.arange(nt),
                            np.broadcast_to(rule.points, (nt,) + rule.points.shape))
        diff = ch - fh
        adet = np.abs(detf)
    sq = diff**2 if diff.ndim == 2 else np.sum(diff**2, axis=-1)
    return float(np.sqrt(np.einsum("e,q,eq->", adet, rule.weights, sq)))


def _trace_values(coeffs, degree, t):
    return np.einsum("mb,mqb->mq", coeffs, edge_basis(degree).values(t))


def l2_error_boundary(u, mesh, degree, reference=None, exact=None, face_parent=None, quad_degree=None):
    """L2(boundary) norm of ``u - reference`` for boundary-trace fields.

    ``u`` is (n_boundary_faces, degree + 1) ordered like ``mesh.boundary_faces``.
    """
    rule = quadrature_edge(quad_degree or 2 * degree + 6)
    u = np.asarray(u, dtype=float)
    if reference is None:
        if exact is None:
            raise ValueError("either reference or exact is required")
        bf = mesh.boundary_faces
        a = mesh.vertices[mesh.faces[bf, 0]]
        b = mesh.vertices[mesh.faces[bf, 1]]
        x = a[:, None] + rule.points[None, :, None] * (b - a)[:, None]
        ex = np.asarray(exact(x.reshape(-1, 2))).reshape(x.shape[:2])
        t = np.broadcast_to(rule.points, x.shape[:2])
        diff = _trace_values(u, degree, t) - ex
        lengths = mesh.face_lengths[bf]
    else:
        ref_u, fine = reference
        _check_nested(mesh, fine)
        if face_parent is None:
            _, face_parent = nested_maps(mesh, fine)
        fbf = fine.boundary_faces
        a = fine.vertices[fine.faces[fbf, 0]]
        b = fine.vertices[fine.faces[fbf, 1]]
        x = a[:, None] + rule.points[None, :, None] * (b - a)[:, None]
        cf = face_parent[fbf]
        ca = mesh.vertices[mesh.faces[cf, 0]]
        cb = mesh.vertices[mesh.faces[cf, 1]]
        d = cb - ca
        if fine.n == mesh.n:
            tc = np.broadcast_to(rule.points, x.shape[:2])
        else:
            tc = np.einsum("mqi,mi->mq", x - ca[:, None], d) / np.einsum("mi,mi->m", d, d)[:, None]
        pos = np.searchsorted(mesh.boundary_faces, cf)
        ch = _trace_values(u[pos], degree, tc)
        fh = _trace_values(np.asarray(ref_u, dtype=float), degree, np.broadcast_to(rule.points, tc.shape))
        diff = ch - fh
        lengths = fine.face_lengths[fbf]
    return float(np.sqrt(np.einsum("m,q,mq->", lengths, rule.weights, diff**2)))


def cost_functional(sol, mesh, data, quad_degree=None):
    """``J = 1/2 |y_h - y_d|^2 + gamma/2 |u_h|^2`` by quadrature."""
    k = sol.k
    qd = quad_degree or error_quadrature_degree(k)
    rule = quadrature_triangle(qd)
    v0, J, det, _ = element_maps(mesh)
    adet = np.abs(det)
    x = np.einsum("eij,qj->eqi", J, rule.points) + v0[:, None, :]
    yd = np.asarray(data.y_d(x.reshape(-1, 2))).reshape(x.shape[:2])
    yh = sol.y @ tri_basis(k + 1).values(rule.points).T
    per_el = adet * ((yh - yd) ** 2 @ rule.weights)
    for e, vertex in singular_elements(mesh, data.singular_point):
        g = graded_rule(qd, vertex)
        xs = g.points @ J[e].T + v0[e]
        ye = tri_basis(k + 1).values(g.points) @ sol.y[e]
        per_el[e] = adet[e] * np.dot(g.weights, (ye - data.y_d(xs)) ** 2)
    erule = quadrature_edge(qd)
    lengths = mesh.face_lengths[mesh.boundary_faces]
    uval = sol.u @ edge_basis(k + 1).values(erule.points).T
    unorm2 = float(np.einsum("m,q,mq->", lengths, erule.weights, uval**2))
    return 0.5 * float(per_el.sum()) + 0.5 * data.gamma * unorm2


@dataclass(frozen=True)
class ExpectedRates:
    """Convergence rates guaranteed by the a priori error bounds.

    ``s_*`` are the projection-limited smoothness indices
    ``min(r_*, k + 1)`` for fluxes and ``min(r_*, k + 2)`` for scalars.
    ``rate_u`` bounds the control, state, adjoint and adjoint-flux errors;
    ``rate_q`` the primary flux (NaN when ``k = 0``, where no bound is given).
    """

    k: int
    s_q: float
    s_y: float
    s_p: float
    s_z: float
    rate_u: float
    rate_q: float
    r_d: float = float("nan")
    r_omega: float = float("nan")

    @property
    def low_order(self):
        return self.k == 0

    @property
    def r(self):
        return min(self.r_d, self.r_omega)

    def rate(self, field):
        return self.rate_q if field == "q" else self.rate_u

    @classmethod
    def from_regularity(cls, k, r_q, r_y, r_p, r_z, **extra):
        s_q, s_y = min(r_q, k + 1), min(r_y, k + 2)
        s_p, s_z = min(r_p, k + 1), min(r_z, k + 2)
        rate_u = min(s_p - 0.5, s_z - 1.5, s_q + 0.5, s_y - 0.5)
        rate_q = min(s_p - 1.0, s_z - 2.0, s_q, s_y - 1.0) if k >= 1 else float("nan")
        return cls(k, s_q, s_y, s_p, s_z, rate_u, rate_q, **extra)

    @classmethod
    def corner_problem(cls, k, t_star, omega):
        """2D convex polygon, ``f = 0``, ``y_d`` in H^t*, largest angle ``omega``.

        The control lies in H^r with ``r = min(1/2 + t*, 3/2, pi/omega - 1/2)``
        and the remaining fields inherit the corresponding regularity.
        """
        r_d = 0.5 + t_star
        r_omega = min(1.5, math.pi / omega - 0.5)
        r = min(r_d, r_omega)
        return cls.from_regularity(k, r - 0.5, r + 0.5, r + 0.5, r + 1.5, r_d=r_d, r_omega=r_omega)


def observed_orders(errors):
    """``log2(e_{j-1} / e_j)``; NaN for the first level or zero errors."""
    e = np.asarray(errors, dtype=float)
    out = np.full(e.shape, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.log2(e[:-1] / e[1:])
    out[1:] = np.where(np.isfinite(r), r, np.nan)
    return out


@dataclass
class RateTable:
    """Per-level errors, observed orders and cost values of one study."""

    k: int
    n: list
    h: list
    errors: dict
    cost: list
    reference_n: int = None

    @property
    def orders(self):
        return {f: observed_orders(self.errors[f]) for f in FIELDS if f in self.errors}

    def rows(self):
        orders = self.orders
        for i, n in enumerate(self.n):
            row = {"level": i, "n": n, "h": self.h[i]}
            for f in FIELDS:
                if f in self.errors:
                    row[f"err_{f}"] = self.errors[f][i]
                    row[f"rate_{f}"] = orders[f][i]
            row["J"] = self.cost[i] if self.cost else float("nan")
            yield row

    def to_csv(self, path=None):
        """CSV with columns level, n, h, err_*/rate_* per field and J."""
        cols = ["level", "n", "h"]
        for f in FIELDS:
            if f in self.errors:
                cols += [f"err_{f}", f"rate_{f}"]
        cols.append("J")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in self.rows():
            w.writerow([_fmt(row.get(c)) if c not in ("level", "n") else row[c] for c in cols])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def format(self):
        """Text table with fields as rows and levels as columns."""
        lines = ["h/sqrt2 " + " ".join(f"{h / math.sqrt(2):>10.3e}" for h in self.h)]
        orders = self.orders
        for f in FIELDS:
            if f not in self.errors:
                continue
            lines.append(f"{f:<7} " + " ".join(f"{e:>10.2e}" for e in self.errors[f]))
            lines.append("order   " + " ".join(
                f"{'-':>10}" if np.isnan(o) else f"{o:>10.2f}" for o in orders[f]))
        return "\n".join(lines)


def _fmt(x):
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return ""
    return f"{x:.6e}"


def solution_errors(sol, mesh, ref, ref_mesh, parent, face_parent):
    """L2 differences of all five fields between a solution and a reference."""
    k = sol.k
    qd = error_quadrature_degree(k)
    return {
        "q": l2_error_volume(sol.q, mesh, k, (ref.q, ref_mesh), parent=parent, quad_degree=qd),
        "p": l2_error_volume(sol.p, mesh, k, (ref.p, ref_mesh), parent=parent, quad_degree=qd),
        "y": l2_error_volume(sol.y, mesh, k + 1, (ref.y, ref_mesh), parent=parent, quad_degree=qd),
        "z": l2_error_volume(sol.z, mesh, k + 1, (ref.z, ref_mesh), parent=parent, quad_degree=qd),
        "u": l2_error_boundary(sol.u, mesh, k + 1, (ref.u, ref_mesh), face_parent=face_parent, quad_degree=qd),
    }


@dataclass
class StudySettings:
    problem: str = "paper"
    k: int = 1
    study_levels: list = field(default_factory=lambda: [2, 4, 8, 16])
    reference_n: int = 128
    strategy: str = "condensed"
    h_mode: str = "local"
    tau2: float = 1.0
    beta: tuple = (1.0, 1.0)
    gamma: float = 1.0
    domain_length: float = 0.125
    min_reference_factor: int = 4

    def problem_data(self):
        if self.problem == "paper":
            d = paper_example(beta=self.beta, tau2=self.tau2)
            return replace(d, gamma=self.gamma, length=self.domain_length)
        if self.problem == "zero":
            return zero_problem(self.beta, self.tau2, self.gamma, self.domain_length)
        raise ValueError(f"unknown problem {self.problem!r}")


def run_study(settings, progress=None, workers=1):
    """Solve on every study level and on the reference level; tabulate errors.

    The reference must be a nested refinement at least
    ``settings.min_reference_factor`` times finer than the finest study level.
    With ``workers > 1`` the study levels are solved concurrently; the table
    is always assembled in level order.
    """
    levels = sorted(int(n) for n in settings.study_levels)
    ref_n = int(settings.reference_n)
    if ref_n < settings.min_reference_factor * levels[-1]:
        raise ValueError(
            f"reference_n={ref_n} must be at least {settings.min_reference_factor} x "
            f"the finest study level {levels[-1]}"
        )
    data = settings.problem_data()
    hier = MeshHierarchy.from_sizes(data.length, levels + [ref_n])
    ri = hier.level_of(ref_n)
    ref_mesh = hier.levels[ri]

    def solve(mesh):
        return solve_optimality(mesh, data, settings.k, settings.strategy, settings.h_mode)

    if progress:
        progress(f"reference n={ref_n}")
    ref = solve(ref_mesh)

    def level(n):
        if progress:
            progress(f"level n={n}")
        li = hier.level_of(n)
        mesh = hier.levels[li]
        sol = solve(mesh)
        errs = solution_errors(sol, mesh, ref, ref_mesh, hier.ancestor_map(li, ri),
                               hier.boundary_ancestor_map(li, ri))
        return errs, cost_functional(sol, mesh, data), mesh.h

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(level, levels))
    else:
        results = [level(n) for n in levels]
    errors = {f: [r[0][f] for r in results] for f in FIELDS}
    return RateTable(settings.k, levels, [r[2] for r in results], errors,
                     [r[1] for r in results], ref_n)


def run_mms(k, levels, beta=(1.0, 1.0), length=0.125, tau2=1.0, h_mode="local"):
    """Forward solves of the smooth manufactured case; errors in ``y`` and ``q``."""
    case = mms_forward_case(beta, length)
    data = case.problem(tau2)
    levels = sorted(int(n) for n in levels)
    errors = {"q": [], "y": []}
    hs = []
    for n in levels:
        mesh = build_structured(length, n)
        sol = solve_forward(mesh, data, case.g, k, h_mode)
        qd = error_quadrature_degree(k)
        errors["q"].append(l2_error_volume(sol.q, mesh, k, exact=case.q, quad_degree=qd))
        errors["y"].append(l2_error_volume(sol.y, mesh, k + 1, exact=case.y, quad_degree=qd))
        hs.append(mesh.h)
    return RateTable(k, levels, hs, errors, [])
