import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import zero_params
from varquad.adaptive import AdaptiveConfig, AdaptiveState, adaptive_check, element_integrals, run_adaptive_training
from varquad.losses import ritz_loss
from varquad.network import ActivationKind, CutoffPoly, NetworkParams
from varquad.problems import ProblemSpec, model_problem_2
from varquad.quadrature import Mesh, gauss_rule, global_refine
from varquad.training import SGD, RuleSpec, TrainConfig, train


def poly_problem(f_coeffs=(0.0,)):
    """u(0) = 0 on (0, 1), polynomial source."""
    f = np.polynomial.Polynomial(f_coeffs)
    return ProblemSpec("poly", (0.0, 1.0), f, f.deriv(), 1.0, 1.0, (0.0,), {1.0: 0.0})


def test_state_nesting_and_validation():
    s = AdaptiveState(Mesh.uniform(0, 1, 4), 1e-3)
    assert s.validation_mesh == global_refine(s.training_mesh)
    with pytest.raises(ValueError):
        AdaptiveState(Mesh.uniform(0, 1, 4), 0.0)
    with pytest.raises(ValueError):
        AdaptiveState(Mesh.uniform(0, 1, 4), 1.0, check_period=0)


def test_zero_network_never_refines(mp2, cutoff2):
    prob = poly_problem()
    s = AdaptiveState(Mesh.uniform(0, 1, 4), 1e-300)
    s, refined = adaptive_check(s, zero_params(), CutoffPoly.for_problem(prob), prob)
    assert not refined and s.n_refinements == 0 and s.checks_done == 1


def test_linear_network_polynomial_integrand_never_refines():
    # sigmoid at zero pre-activation: u = x (b1 + A1/2) is linear, integrand is a cubic
    prob = poly_problem((1.0, -2.0))
    cut = CutoffPoly.for_problem(prob)
    p = NetworkParams([0.0, 0.0], [0.0, 0.0], [1.5, -0.7], 0.3, ActivationKind.SIGMOID)
    s = AdaptiveState(Mesh.uniform(0, 1, 3), 1e-12)
    for _ in range(3):
        s, refined = adaptive_check(s, p, cut, prob, gauss_order=2)
        assert not refined


def test_refines_where_integrand_is_rough(mp2, cutoff2):
    steep = NetworkParams([40.0], [-40.0 * 0.3], [5.0], 0.0, ActivationKind.TANH)
    s = AdaptiveState(Mesh.uniform(0, 10, 10), 1e-3)
    s, refined = adaptive_check(s, steep, cutoff2, mp2, iteration=7)
    assert refined
    assert [r.element for r in s.refinement_log] == [1]
    r = s.refinement_log[0]
    assert (r.iteration, r.left, r.right) == (7, 0.0, 1.0)
    assert s.training_mesh.n_elements == 11
    assert s.validation_mesh == global_refine(s.training_mesh)


def test_max_refinements_caps_sweep(mp2, cutoff2):
    rough = NetworkParams([30.0, 30.0], [-30 * 0.5, -30 * 5.5], [5.0, 5.0], 0.0, ActivationKind.TANH)
    s = AdaptiveState(Mesh.uniform(0, 10, 10), 1e-6, max_refinements=1)
    s, _ = adaptive_check(s, rough, cutoff2, mp2)
    assert s.n_refinements == 1 and s.exhausted


@given(seed=st.integers(0, 2**32 - 1), checks=st.integers(1, 4))
@settings(max_examples=500, deadline=None)
def test_nesting_and_monotone_element_count(seed, checks):
    rng = np.random.default_rng(seed)
    prob = model_problem_2()
    cut = CutoffPoly.for_problem(prob)
    s = AdaptiveState(Mesh.uniform(0, 10, int(rng.integers(1, 12))), float(10 ** rng.uniform(-6, 1)))
    counts = [s.training_mesh.n_elements]
    for k in range(checks):
        p = NetworkParams.from_flat(rng.uniform(-3, 3, 13), ActivationKind.TANH)
        s, _ = adaptive_check(s, p, cut, prob, iteration=k)
        counts.append(s.training_mesh.n_elements)
        assert s.validation_mesh == global_refine(s.training_mesh)
    assert np.all(np.diff(counts) >= 0)
    assert counts[-1] - counts[0] == s.n_refinements
    its = [r.iteration for r in s.refinement_log]
    assert its == sorted(its)


def test_element_integrals_sum_to_volume_term(mp2, cutoff2):
    p = NetworkParams([0.3, -0.2], [0.1, 0.4], [1.0, 2.0], 0.5, ActivationKind.TANH)
    mesh = Mesh.uniform(0, 10, 7)
    parts = element_integrals(p, cutoff2, mp2, mesh, 3)
    zero_g = ProblemSpec("mp2-g0", mp2.domain, mp2.f, mp2.f_prime, 2.0, 0.0, (0.0,), {10.0: 0.0})
    assert parts.sum() == pytest.approx(ritz_loss(p, cutoff2, zero_g, gauss_rule(mesh, 3)), rel=1e-12)


def test_infinite_tolerance_matches_fixed_training(mp2, cutoff2):
    tc = TrainConfig(optimizer=SGD(1e-3), iterations=300, seed=4, rule=RuleSpec("gauss", 3, 10), snapshot_period=50)
    pa, state, ta = run_adaptive_training(mp2, AdaptiveConfig(tc, float("inf"), 50), cutoff2)
    tc_val = TrainConfig(**{**tc.__dict__, "validation_rule": RuleSpec("gauss", 3, 20)})
    pf, tf = train(mp2, cutoff2, tc_val)
    assert state.n_refinements == 0 and state.checks_done == 5
    np.testing.assert_array_equal(pa.flat(), pf.flat())
    assert ta.train_loss == tf.train_loss and ta.val_loss == tf.val_loss


def test_max_checks_limits_sweeps(mp2, cutoff2):
    tc = TrainConfig(optimizer=SGD(1e-3), iterations=100, rule=RuleSpec("gauss", 3, 10), snapshot_period=50)
    _, state, _ = run_adaptive_training(mp2, AdaptiveConfig(tc, 1e9, 10, max_checks=3), cutoff2)
    assert state.checks_done == 3


def test_needs_gauss_rule(mp2):
    tc = TrainConfig(rule=RuleSpec("midpoint"))
    with pytest.raises(ValueError):
        run_adaptive_training(mp2, AdaptiveConfig(tc))


def test_log_csv(tmp_path, mp2, cutoff2):
    steep = NetworkParams([40.0], [-12.0], [5.0], 0.0, ActivationKind.TANH)
    s, _ = adaptive_check(AdaptiveState(Mesh.uniform(0, 10, 10), 1e-3), steep, cutoff2, mp2, iteration=100)
    path = tmp_path / "log.csv"
    s.write_log(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,element_left,element_right,delta"
    assert lines[1].startswith("100,0,1,")
    assert len(lines) == 1 + s.n_refinements
