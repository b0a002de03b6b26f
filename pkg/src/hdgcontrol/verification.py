"""Randomized checks of the discrete operator identities."""

from dataclasses import dataclass, field, replace

import numpy as np

from .hdg.assembly import assemble_monolithic
from .hdg.dofs import DiscreteTuple, DofMap
from .hdg.operators import (
    FormContext,
    adjoint_identity,
    apply_B1,
    apply_B2,
    apply_full,
    energy_B1,
    energy_B2,
    random_fields,
)
from .mesh import build_structured
from .problem import paper_example

IDENTITY_TOL = 1e-10
CONSISTENCY_TOL = 1e-11


@dataclass
class IdentityReport:
    k: int
    n: int
    seed: int
    trials: int
    worst: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    @property
    def passed(self):
        return {name: self.worst[name] <= self.tolerances[name] for name in self.worst}

    @property
    def ok(self):
        return all(self.passed.values())

    def __str__(self):
        lines = [f"identity checks: k={self.k} n={self.n} seed={self.seed} trials={self.trials}"]
        for name, dev in self.worst.items():
            flag = "PASS" if self.passed[name] else "FAIL"
            lines.append(f"{flag}  {name:<12} worst relative deviation {dev:.3e} (tol {self.tolerances[name]:.0e})")
        return "\n".join(lines)


def verify_identities(k=1, n=4, seed=42, trials=100, data=None, break_a2=False, h_mode="local"):
    """Energy identities, adjoint identity and assembly consistency on random tuples.

    Relative deviations: energy ``|B(t,t) - E(t)| / |E(t)|``; adjoint
    ``|B1 + B2| / max(|B1|, |B2|)``; consistency ``|T.(A X) - a(X, T)|``
    over ``|T| |A X|``.
    """
    data = data or paper_example()
    if break_a2:
        data = replace(data, enforce_a2=False)
    mesh = build_structured(data.length, n)
    dofmap = DofMap(mesh, k)
    ctx = FormContext(mesh, data, k, h_mode)
    A, _, _ = assemble_monolithic(mesh, data, k, h_mode, check=not break_a2)
    rng = np.random.default_rng(seed)

    worst = {"energy_B1": 0.0, "energy_B2": 0.0, "adjoint": 0.0, "consistency": 0.0}
    for _ in range(trials):
        t = DiscreteTuple.random(dofmap, rng)
        for name, form, energy in (("energy_B1", apply_B1, energy_B1), ("energy_B2", apply_B2, energy_B2)):
            lhs = form(t, t, mesh, data, k, ctx=ctx)
            rhs = energy(t, mesh, data, k, ctx=ctx)
            worst[name] = max(worst[name], abs(lhs - rhs) / abs(rhs))

        s, a = DiscreteTuple.random(dofmap, rng), DiscreteTuple.random(dofmap, rng)
        first, second = adjoint_identity(s, a, mesh, data, k, ctx=ctx)
        worst["adjoint"] = max(worst["adjoint"], abs(first + second) / max(abs(first), abs(second)))

        X, T = random_fields(dofmap, rng), random_fields(dofmap, rng)
        AX = A @ X.to_vector()
        tv = T.to_vector()
        dev = abs(tv @ AX - apply_full(X, T, mesh, data, k, ctx=ctx))
        worst["consistency"] = max(worst["consistency"], dev / (np.linalg.norm(tv) * np.linalg.norm(AX)))

    tol = {"energy_B1": IDENTITY_TOL, "energy_B2": IDENTITY_TOL, "adjoint": IDENTITY_TOL,
           "consistency": CONSISTENCY_TOL}
    return IdentityReport(k, n, seed, trials, worst, tol)
