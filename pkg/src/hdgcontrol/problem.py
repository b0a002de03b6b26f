"""Problem data for the boundary control problem and its validation.

A problem is the tuple (beta, f, y_d, gamma, tau2) on the square
``[0, L]^2``.  The second stabilization function is never stored: it is
always ``tau1 = tau2 + beta . n`` evaluated where it is needed.
"""

from dataclasses import dataclass, field

import numpy as np

from .mesh import outward_normals


def _zero(x):
    return np.zeros(len(x))


@dataclass(frozen=True)
class ProblemData:
    """Coefficients of one problem instance.

    Scalar functions take an (m, 2) array of points and return m values.
    ``beta`` is a constant vector; ``div_beta`` its (constant) divergence,
    which is 0 for every constant field.  ``singular_point``, when set, marks a
    point where ``y_d`` blows up; elements touching it get a graded rule.
    ``enforce_a2=False`` replaces ``tau1`` by ``tau2`` and exists only to
    demonstrate that the adjoint identity depends on it.
    """

    beta: tuple = (0.0, 0.0)
    f: object = _zero
    y_d: object = _zero
    gamma: float = 1.0
    tau2: float = 1.0
    length: float = 1.0
    div_beta: float = 0.0
    singular_point: tuple = None
    name: str = "custom"
    enforce_a2: bool = True

    @property
    def beta_vec(self):
        return np.asarray(self.beta, dtype=float)

    def tau1(self, beta_n):
        if not self.enforce_a2:
            return np.full_like(beta_n, self.tau2)
        return self.tau2 + beta_n


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    worst: float


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple = field(default_factory=tuple)

    @property
    def ok(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def __str__(self):
        lines = [
            f"{'PASS' if c.passed else 'FAIL'}  {c.name:<10} worst={c.worst:.6g}"
            for c in self.checks
        ]
        return "\n".join(lines)


class InvalidProblem(ValueError):
    def __init__(self, report):
        self.report = report
        names = ", ".join(c.name for c in report.failures())
        super().__init__(f"problem data violates: {names}\n{report}")


def validate(data, mesh):
    """Check the standing assumptions on ``data`` over ``mesh``.

    Checks, in order: ``gamma > 0``; ``div beta <= 0``; tau2 constant per
    face (A1); ``tau1 = tau2 + beta.n`` (A2); ``min(tau2 + beta.n / 2) > 0``
    on every element boundary (A3); and the implied
    ``min(tau1 - beta.n / 2) > 0``.
    """
    nrm, _ = outward_normals(mesh)
    bn = nrm @ data.beta_vec
    tau2 = np.full_like(bn, float(data.tau2))
    tau1 = data.tau1(bn)

    a2_dev = float(np.max(np.abs(tau1 - (tau2 + bn))))
    a3 = float(np.min(tau2 + 0.5 * bn))
    t1 = float(np.min(tau1 - 0.5 * bn))
    checks = (
        Check("gamma", data.gamma > 0, float(data.gamma)),
        Check("div_beta", data.div_beta <= 0, float(data.div_beta)),
        Check("A1", bool(np.isscalar(data.tau2) and np.isfinite(data.tau2)), 0.0),
        Check("A2", a2_dev <= 1e-14, a2_dev),
        Check("A3", a3 > 0, a3),
        Check("tau1", t1 > 0, t1),
    )
    return ValidationReport(checks)


def require_valid(data, mesh):
    report = validate(data, mesh)
    if not report.ok:
        raise InvalidProblem(report)
    return report


def _paper_yd(x):
    r2 = x[:, 0] ** 2 + x[:, 1] ** 2
    return r2 ** (-1.0 / 3.0)


def paper_example(beta=(1.0, 1.0), tau2=1.0):
    """The square-domain test problem with a corner-singular desired state."""
    return ProblemData(
        beta=tuple(float(b) for b in beta),
        f=_zero,
        y_d=_paper_yd,
        gamma=1.0,
        tau2=float(tau2),
        length=1.0 / 8.0,
        singular_point=(0.0, 0.0),
        name="paper",
    )


def zero_problem(beta=(1.0, 1.0), tau2=1.0, gamma=1.0, length=1.0 / 8.0):
    return ProblemData(
        beta=tuple(float(b) for b in beta),
        gamma=float(gamma),
        tau2=float(tau2),
        length=float(length),
        name="zero",
    )


@dataclass(frozen=True)
class MmsCase:
    """Smooth manufactured state with its flux ``q = -grad y`` and source."""

    y: object
    q: object
    f: object
    g: object
    beta: tuple
    length: float

    def problem(self, tau2=1.0):
        return ProblemData(
            beta=self.beta, f=self.f, tau2=tau2, length=self.length, name="mms"
        )


def mms_forward_case(beta=(1.0, 1.0), length=1.0 / 8.0):
    """``y = sin(2 pi x / L) sin(2 pi y / L)``, homogeneous on the boundary."""
    beta = tuple(float(b) for b in beta)
    w = 2.0 * np.pi / length

    def y(x):
        return np.sin(w * x[:, 0]) * np.sin(w * x[:, 1])

    def grad(x):
        sx, sy = np.sin(w * x[:, 0]), np.sin(w * x[:, 1])
        cx, cy = np.cos(w * x[:, 0]), np.cos(w * x[:, 1])
        return np.column_stack([w * cx * sy, w * sx * cy])

    def q(x):
        return -grad(x)

    def f(x):
        return 2.0 * w**2 * y(x) + grad(x) @ np.asarray(beta)

    return MmsCase(y=y, q=q, f=f, g=_zero, beta=beta, length=float(length))


def polynomial_forward_case(beta=(1.0, 1.0), length=1.0):
    """Linear state ``y = x1 + x2``; reproduced exactly for every degree."""
    beta = tuple(float(b) for b in beta)

    def y(x):
        return x[:, 0] + x[:, 1]

    def q(x):
        return -np.ones((len(x), 2))

    def f(x):
        return np.full(len(x), beta[0] + beta[1])

    return MmsCase(y=y, q=q, f=f, g=y, beta=beta, length=float(length))
