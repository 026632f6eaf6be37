import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from specopt.core import optimality_certificate
from specopt.exceptions import DivergedError, DomainError, PreconditionError, UnsupportedOperation
from specopt.oracles import FDConfig, FunctionOracle, Problem, specular_gradient
from specopt.optimizers import (Box, EuclideanBall, RunConfig, StepSchedule, adam, gd, hspeg,
                                projected_speg, speg, sspeg, subgradient_baseline,
                                trace_invariants, verify_basic_inequality)
from specopt.problems import (AbsNorm, ElasticNet, InstanceSpec, MaxAffine, Quadratic,
                              generate_instance)


class SqrtAbs(Problem):
    """sqrt(|x|): nonconvex, minimized at 0, used to show the bound check can fail."""

    dim = 1
    exact_one_sided = True

    def value(self, x):
        return math.sqrt(abs(float(x[0])))

    def one_sided_partials(self, x):
        t = float(x[0])
        d = math.copysign(0.5 / math.sqrt(abs(t)), t)
        return np.array([d]), np.array([d])


def small_instance(l1=0.0, l2=1.0, seed=0, m=20, n=5):
    return generate_instance(InstanceSpec(m, n, l1, l2, seed, 0))


def test_abs_hand_trace():
    cfg = RunConfig(max_iter=3, schedule=StepSchedule.normalized(1.0), retain_iterates=True)
    tr = speg(AbsNorm(1), [2.0], cfg)
    xs = [float(x[0]) for x in tr.iterates]
    assert xs == pytest.approx([2.0, 1.0, 0.5, 1 / 6], abs=1e-15)
    assert tr.f_values.tolist() == pytest.approx([2.0, 1.0, 0.5, 1 / 6])
    assert tr.steps.tolist() == pytest.approx([1.0, 0.5, 1 / 3])
    assert tr.stop_reason == "max_iter" and tr.best_f == pytest.approx(1 / 6)
    assert verify_basic_inequality(tr, AbsNorm(1), [0.0]) <= 1e-10


def test_abs_hand_trace_bound_values():
    # k = 0: lhs = 2, rhs = (4 + 1) / 2; k = 2: lhs = 0.5, rhs = (4 + 1 + 1/4 + 1/9) / (2 * 11/6)
    cfg = RunConfig(max_iter=3, schedule=StepSchedule.normalized(1.0), retain_iterates=True)
    viol = verify_basic_inequality(speg(AbsNorm(1), [2.0], cfg), AbsNorm(1), [0.0])
    expected = max(2 - 2.5, 1 - (5.25 / 3), 0.5 - (4 + 1 + 0.25 + 1 / 9) / (11 / 3))
    assert viol == pytest.approx(expected, abs=1e-14)


def test_zero_gradient_start():
    tr = speg(AbsNorm(2), [0.0, 0.0])
    assert tr.stop_reason == "zero_gradient" and tr.n_iter == 0
    assert tr.best_x.tolist() == [0.0, 0.0] and tr.best_f == 0.0
    tr = speg(MaxAffine([[1.0], [-1.0]], [0.0, 1.0]), [0.5])
    assert tr.stop_reason == "zero_gradient" and tr.best_x.tolist() == [0.5]


def test_elastic_net_converged_certificate():
    p, x0 = small_instance(l1=0.3, l2=1.0)
    tr = speg(p, x0, RunConfig(max_iter=20000))
    assert optimality_certificate(specular_gradient(p, tr.best_x).g).sum_bound_ok


def test_fd_fallback_matches_exact():
    p = Quadratic([[2.0, 0.5], [0.5, 1.0]], [1.0, -1.0])
    f = FunctionOracle(p.value, 2)
    with pytest.raises(UnsupportedOperation):
        speg(f, [1.0, 1.0])
    exact = speg(p, [1.0, 1.0], RunConfig(max_iter=50))
    approx = speg(f, [1.0, 1.0], RunConfig(max_iter=50), fd=FDConfig())
    np.testing.assert_allclose(approx.f_values, exact.f_values, atol=1e-6)


def test_sspeg_single_component_equals_speg(rng):
    p = ElasticNet(rng.standard_normal((1, 4)), [0.5], 0.2, 0.1)
    x0 = rng.standard_normal(4)
    cfg = RunConfig(max_iter=200, seed=3)
    a, b = speg(p, x0, cfg), sspeg(p, x0, cfg)
    np.testing.assert_array_equal(a.f_values, b.f_values)
    np.testing.assert_array_equal(a.best_x, b.best_x)


def test_hspeg_boundaries():
    p, x0 = small_instance(l1=0.5)
    cfg = RunConfig(max_iter=150, seed=9)
    h0 = hspeg(p, x0, cfg.with_(switch_iter=0))
    s = sspeg(p, x0, cfg)
    np.testing.assert_array_equal(h0.f_values, s.f_values)
    np.testing.assert_array_equal(h0.components, s.components)
    hk = hspeg(p, x0, cfg.with_(switch_iter=150))
    np.testing.assert_array_equal(hk.f_values, speg(p, x0, cfg).f_values)
    assert hk.components is None
    h10 = hspeg(p, x0, cfg.with_(switch_iter=10))
    np.testing.assert_array_equal(h10.f_values[:11], speg(p, x0, cfg).f_values[:11])
    assert len(h10.components) == 140


def test_stochastic_determinism():
    p, x0 = small_instance(l1=0.5)
    cfg = RunConfig(max_iter=300, seed=21)
    a, b = sspeg(p, x0, cfg), sspeg(p, x0, cfg)
    np.testing.assert_array_equal(a.f_values, b.f_values)
    np.testing.assert_array_equal(a.components, b.components)
    c = sspeg(p, x0, cfg.with_(seed=22))
    assert not np.array_equal(a.components, c.components)


def test_projected_examples():
    p, x0 = small_instance(l1=0.4)
    cfg = RunConfig(max_iter=200)
    big = projected_speg(p, x0, cfg, EuclideanBall(np.zeros(5), 1e6))
    np.testing.assert_array_equal(big.f_values, speg(p, x0, cfg).f_values)
    lin = MaxAffine([[1.0]], [0.0])
    tr = projected_speg(lin, [1.0], RunConfig(max_iter=5, retain_iterates=True),
                        Box([0.0], [1.0]))
    assert [float(x[0]) for x in tr.iterates] == [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    assert tr.best_f == 0.0
    with pytest.raises(PreconditionError):
        projected_speg(lin, [2.0], cfg, Box([0.0], [1.0]))
    ball = EuclideanBall([1.0, 1.0], 2.0)
    y = ball.project(np.array([1.0 + 4.0, 1.0]))
    assert np.linalg.norm(y - ball.center) == pytest.approx(2.0)
    assert ball.project(np.array([1.5, 1.0])).tolist() == [1.5, 1.0]


def test_projected_iterates_stay_feasible(rng):
    p, x0 = small_instance(l1=0.4)
    ball = EuclideanBall(np.zeros(5), 0.3)
    tr = projected_speg(p, ball.project(x0), RunConfig(max_iter=300, retain_iterates=True),
                        ball)
    assert all(ball.contains(x) for x in tr.iterates)


def test_gd_geometric_decay():
    q = Quadratic(np.eye(4))
    x0 = np.ones(4)
    tr = gd(q, x0, RunConfig(max_iter=100, retain_iterates=True))
    for k in (0, 1, 10, 100):
        np.testing.assert_allclose(tr.iterates[k], (1 - 0.001) ** k * x0, rtol=1e-12)
    assert np.all(tr.steps == 0.001)


def test_adam_first_step_has_length_lr():
    q = Quadratic(np.eye(3))
    tr = adam(q, [1.0, -2.0, 3.0], RunConfig(max_iter=1, retain_iterates=True))
    np.testing.assert_allclose(tr.iterates[1], [0.99, -1.99, 2.99], atol=1e-9)


def test_baselines_use_zero_sign_at_kink():
    p = ElasticNet([[1.0]], [0.0], lambda1=1.0)
    # at x = 0 the smooth part vanishes; sign(0) = 0 gives a zero gradient
    assert gd(p, [0.0]).stop_reason == "zero_gradient"
    assert subgradient_baseline(p, [0.0]).stop_reason == "zero_gradient"
    q = ElasticNet([[1.0]], [-1.0], lambda1=1.0)
    # smooth part 1: classical gradient 1, specular 0.618
    sub = subgradient_baseline(q, [0.0], RunConfig(max_iter=1))
    spe = speg(q, [0.0], RunConfig(max_iter=1))
    assert sub.grad_norms[0] == 1.0
    assert spe.grad_norms[0] == pytest.approx(2 / (1 + math.sqrt(5)))


def test_subgradient_baseline_equals_speg_off_kinks(rng):
    p = Quadratic([[3.0, 1.0], [1.0, 2.0]], [0.5, 0.5])
    x0 = rng.standard_normal(2)
    cfg = RunConfig(max_iter=100)
    np.testing.assert_array_equal(subgradient_baseline(p, x0, cfg).f_values,
                                  speg(p, x0, cfg).f_values)


def test_divergence_carries_partial_trace():
    q = Quadratic(np.eye(2))
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(DivergedError) as info:
            gd(q, [1.0, 1.0], RunConfig(max_iter=10 ** 4), lr=10.0)
    tr = info.value.trace
    assert tr.stop_reason == "diverged" and tr.n_iter > 100
    assert np.all(np.isfinite(tr.best_f_history))


def test_invariants_on_traces():
    p, x0 = small_instance(l1=0.5)
    for method in (speg, sspeg, hspeg):
        tr = method(p, x0, RunConfig(max_iter=500, seed=1))
        inv = trace_invariants(tr, StepSchedule.normalized(4.0))
        assert inv["best_monotone"] and inv["step_compliance_max_err"] <= 1e-12
        assert tr.best_f == min(tr.f_values)


def test_config_validation():
    with pytest.raises(DomainError):
        RunConfig(max_iter=0)
    with pytest.raises(DomainError):
        RunConfig(tol=0.0)
    with pytest.raises(DomainError):
        StepSchedule("nope", 1.0)
    with pytest.raises(DomainError):
        StepSchedule.normalized(-1.0)
    s = StepSchedule.constant(0.1)
    assert StepSchedule.from_dict(s.to_dict()) == s
    assert StepSchedule.raw(2.0).step(3, 100.0) == 0.5
    assert StepSchedule.normalized(4.0).step(3, 0.0) == 0.0


def test_bound_check_requires_iterates():
    p, x0 = small_instance()
    with pytest.raises(PreconditionError):
        verify_basic_inequality(speg(p, x0, RunConfig(max_iter=5)), p, x0)


def test_bound_on_quadratic():
    q = Quadratic([[2.0, 0.5], [0.5, 1.0]], [1.0, -1.0])
    xs = np.linalg.solve(q.Q, q.q)
    tr = speg(q, [3.0, -4.0], RunConfig(max_iter=2000, retain_iterates=True))
    assert verify_basic_inequality(tr, q, xs) <= 1e-10


def test_bound_check_can_fail():
    # for convex f the bound holds for every reference point, so failure needs a nonconvex f
    cfg = RunConfig(max_iter=3, schedule=StepSchedule.normalized(0.5), retain_iterates=True)
    tr = speg(SqrtAbs(), [1.0], cfg)
    # k = 0: lhs = 1, rhs = (1 + 0.25) / 2
    assert verify_basic_inequality(tr, SqrtAbs(), [0.0]) == pytest.approx(0.375)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=2))
def test_bound_holds_for_any_reference_point_when_convex(ref):
    q = Quadratic([[2.0, 0.5], [0.5, 1.0]], [1.0, -1.0])
    tr = speg(q, [3.0, -4.0], RunConfig(max_iter=200, retain_iterates=True))
    assert verify_basic_inequality(tr, q, ref) <= 1e-9 * (1 + abs(q.value(ref)))


def test_sspeg_expected_gap_decreases():
    p, x0 = small_instance(l1=0.0, l2=1.0, seed=4, m=20, n=5)
    xs = p.smooth_minimizer()
    fs = p.value(xs)
    checkpoints = (100, 1000, 10000)
    gaps = np.zeros(len(checkpoints))
    for r in range(50):
        tr = sspeg(p, x0, RunConfig(max_iter=10000, seed=1000 + r))
        gaps += [tr.best_f_history[k] - fs for k in checkpoints]
    gaps /= 50
    assert gaps[0] > gaps[1] > gaps[2] >= 0


def test_trace_exports():
    p, x0 = small_instance(l1=0.5)
    tr = speg(p, x0, RunConfig(max_iter=4))
    rows = tr.to_csv().strip().split("\n")
    assert rows[0] == "iter,f,grad_norm,best_f,wall_ms"
    assert len(rows) == 1 + 5
    assert rows[-1].split(",")[2] == ""
    doc = json.loads(tr.summary_json({"max_iter": 4}))
    assert set(doc) == {"method", "config", "stop_reason", "best_f", "iters", "total_ms"}
    assert doc["iters"] == 4 and doc["method"] == "speg"
