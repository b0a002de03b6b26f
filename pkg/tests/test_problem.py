import numpy as np
import pytest
from dataclasses import replace

from hdgcontrol.mesh import build_structured
from hdgcontrol.problem import (
    InvalidProblem,
    mms_forward_case,
    paper_example,
    polynomial_forward_case,
    require_valid,
    validate,
    zero_problem,
)


def test_paper_example_fields():
    d = paper_example()
    assert d.length == 1 / 8
    assert d.gamma == 1.0
    assert d.beta == (1.0, 1.0)
    assert d.tau2 == 1.0
    assert np.all(d.f(np.random.default_rng(0).random((5, 2))) == 0.0)
    assert d.y_d(np.array([[1 / 8, 1 / 8]]))[0] == pytest.approx(3.17480210393639894950, rel=1e-15)


def test_paper_example_valid():
    d = paper_example()
    rep = validate(d, build_structured(d.length, 4))
    assert rep.ok
    # beta.n is 0 on diagonals and +-1 on axis faces, so min(tau2 + beta.n/2) = 1/2
    assert rep["A3"].worst == pytest.approx(0.5)
    assert rep["tau1"].worst == pytest.approx(0.5)
    assert rep["A2"].worst == 0.0


def test_small_tau2_violates_a3():
    d = paper_example(tau2=0.5)
    rep = validate(d, build_structured(d.length, 2))
    assert not rep.ok
    assert [c.name for c in rep.failures()] == ["A3", "tau1"]
    assert rep["A3"].worst == pytest.approx(0.0)
    with pytest.raises(InvalidProblem, match="A3"):
        require_valid(d, build_structured(d.length, 2))


@pytest.mark.parametrize("tau2", [0.51, 2.0, 10.0])
def test_larger_tau2_valid(tau2):
    d = paper_example(tau2=tau2)
    assert validate(d, build_structured(d.length, 2)).ok


@pytest.mark.parametrize("gamma, name", [(0.0, "gamma"), (-1.0, "gamma")])
def test_gamma_must_be_positive(gamma, name):
    d = replace(paper_example(), gamma=gamma)
    rep = validate(d, build_structured(d.length, 2))
    assert [c.name for c in rep.failures()] == [name]


def test_positive_divergence_rejected():
    d = replace(paper_example(), div_beta=0.5)
    assert [c.name for c in validate(d, build_structured(d.length, 2)).failures()] == ["div_beta"]


def test_broken_a2_flagged():
    d = replace(paper_example(), enforce_a2=False)
    rep = validate(d, build_structured(d.length, 2))
    assert rep["A2"].worst == pytest.approx(1.0)
    assert not rep["A2"].passed


def test_report_text():
    rep = validate(paper_example(), build_structured(1 / 8, 2))
    text = str(rep)
    assert text.count("PASS") == 6
    with pytest.raises(KeyError):
        rep["nope"]


def test_zero_problem():
    d = zero_problem()
    x = np.random.default_rng(1).random((4, 2))
    assert np.all(d.f(x) == 0) and np.all(d.y_d(x) == 0)


def test_mms_source_by_finite_differences():
    case = mms_forward_case(beta=(1.0, 1.0))
    L = case.length
    rng = np.random.default_rng(3)
    x = rng.uniform(0.1 * L, 0.9 * L, size=(6, 2))
    h = 1e-4 * L
    e = [np.array([h, 0.0]), np.array([0.0, h])]
    grad = np.column_stack([(case.y(x + ei) - case.y(x - ei)) / (2 * h) for ei in e])
    lap = sum((case.y(x + ei) - 2 * case.y(x) + case.y(x - ei)) / h**2 for ei in e)
    assert np.allclose(case.q(x), -grad, rtol=1e-6)
    f = -lap + grad @ np.array(case.beta)
    assert np.allclose(case.f(x), f, rtol=1e-5, atol=1e-3)


def test_mms_known_value():
    case = mms_forward_case()
    L = case.length
    x = np.array([[L / 4, L / 4]])
    assert case.y(x)[0] == pytest.approx(1.0)
    assert case.f(x)[0] == pytest.approx(8 * np.pi**2 / L**2, rel=1e-13)
    edge = np.array([[0.0, 0.3 * L], [L, 0.7 * L], [0.2 * L, L]])
    assert np.allclose(case.y(edge), 0.0, atol=1e-14)


def test_polynomial_case():
    case = polynomial_forward_case(beta=(2.0, -1.0))
    x = np.array([[0.2, 0.3]])
    assert case.f(x)[0] == 1.0
    assert case.g(x)[0] == pytest.approx(0.5)
    assert case.problem(tau2=3.0).tau2 == 3.0
