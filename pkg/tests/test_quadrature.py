import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varquad.quadrature import (
    EvaluationError,
    Mesh,
    QuadratureRule,
    gauss_rule,
    global_refine,
    integrate,
    midpoint_rule,
    monte_carlo_rule,
    refine_element,
)


def test_gauss_examples():
    r = gauss_rule(Mesh([0.0, 1.0]), 3)
    assert integrate(r, lambda x: x**5) == pytest.approx(1 / 6, rel=1e-15)
    assert integrate(r, lambda x: x**2) == pytest.approx(1 / 3, rel=1e-15)
    r1 = gauss_rule(Mesh([0.0, 10.0]), 1)
    assert r1.points.tolist() == [5.0] and r1.weights.tolist() == [10.0]
    r4 = gauss_rule(Mesh.uniform(0, 10, 4), 3)
    assert len(r4) == 12 and r4.weights.sum() == pytest.approx(10.0, rel=1e-12)
    with pytest.raises(ValueError):
        gauss_rule(Mesh([0.0, 1.0]), 6)


def test_midpoint_examples():
    r = midpoint_rule(0, 10, 50)
    assert r.points[0] == pytest.approx(0.1) and r.weights[0] == pytest.approx(0.2)
    r1 = midpoint_rule(0, 10, 1)
    assert r1.points.tolist() == [5.0] and r1.weights.tolist() == [10.0]
    assert len(midpoint_rule(0, 10, 20)) == 20
    assert integrate(r1, lambda x: 2.0) == 20.0


def test_monte_carlo_rule():
    for seed in range(5):
        r = monte_carlo_rule(0, 10, 37, seed)
        assert integrate(r, lambda x: np.ones_like(x)) == pytest.approx(10.0, rel=1e-14)
        assert np.all((r.points > 0) & (r.points < 10))
    a, b = monte_carlo_rule(0, 10, 100, 7), monte_carlo_rule(0, 10, 100, 7)
    assert np.array_equal(a.points, b.points)


def test_monte_carlo_unbiased():
    est = [integrate(monte_carlo_rule(0, 10, 100, s), np.square) for s in range(1000)]
    assert np.mean(est) == pytest.approx(1000 / 3, rel=0.01)


def test_integrate_reports_bad_node():
    r = midpoint_rule(0, 1, 4)
    with pytest.raises(EvaluationError) as exc, np.errstate(divide="ignore"):
        integrate(r, lambda x: 1.0 / (x - 0.375))
    assert exc.value.node == 0.375
    assert integrate(r, lambda x: 0.0 * x) == 0.0


def test_refinement():
    m = Mesh([0, 2.5, 5, 7.5, 10])
    assert refine_element(m, 1).breakpoints.tolist() == [0, 1.25, 2.5, 5, 7.5, 10]
    assert refine_element(Mesh([0, 1]), 1).breakpoints.tolist() == [0, 0.5, 1]
    twice = refine_element(refine_element(m, 1), 1)
    assert twice.widths.tolist() == [0.625, 0.625, 1.25, 2.5, 2.5, 2.5]
    assert global_refine(Mesh([0, 5, 10])).breakpoints.tolist() == [0, 2.5, 5, 7.5, 10]
    with pytest.raises(IndexError):
        refine_element(m, 5)
    with pytest.raises(IndexError):
        refine_element(m, 0)


def test_invalid_objects():
    with pytest.raises(ValueError):
        Mesh([0.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        Mesh([1.0])
    with pytest.raises(ValueError):
        QuadratureRule([0.5], [-1.0], "x")


@given(
    order=st.integers(1, 5),
    cuts=st.lists(st.integers(1, 999), min_size=0, max_size=6, unique=True),
    seed=st.integers(0, 2**31),
)
@settings(max_examples=500, deadline=None)
def test_gauss_exactness_property(order, cuts, seed):
    mesh = Mesh(np.concatenate([[0.0], np.sort(cuts) / 1000, [1.0]]) * 3 - 1)
    rule = gauss_rule(mesh, order)
    rng = np.random.default_rng(seed)
    deg = 2 * order - 1
    # independent random polynomial per element, integrated exactly by antiderivative
    total, exact = 0.0, 0.0
    for j in range(mesh.n_elements):
        c = rng.normal(size=deg + 1)
        a, b = mesh.element(j + 1)
        sel = (rule.points > a) & (rule.points < b)
        P = np.polynomial.Polynomial(c)
        total += rule.weights[sel] @ P(rule.points[sel])
        Q = P.integ()
        exact += Q(b) - Q(a)
    assert abs(total - exact) <= 1e-12 * max(1.0, abs(exact))


@given(
    n=st.integers(1, 40),
    a=st.floats(-5, 5),
    w=st.floats(0.1, 10),
    refinements=st.lists(st.integers(1, 1000), max_size=8),
)
@settings(max_examples=500, deadline=None)
def test_partition_and_nesting(n, a, w, refinements):
    mesh = Mesh.uniform(a, a + w, n)
    for j in refinements:
        mesh = refine_element(mesh, 1 + j % mesh.n_elements)
    fine = global_refine(mesh)
    assert set(mesh.breakpoints.tolist()) <= set(fine.breakpoints.tolist())
    assert fine.n_elements == 2 * mesh.n_elements
    for rule in (gauss_rule(mesh, 1 + n % 5), midpoint_rule(a, a + w, n), monte_carlo_rule(a, a + w, n, n)):
        assert np.all(rule.weights > 0)
        assert rule.weights.sum() == pytest.approx(w, rel=1e-12)
        assert np.all((rule.points > a) & (rule.points < a + w))
