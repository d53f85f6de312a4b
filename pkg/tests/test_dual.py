import numpy as np
import pytest

from accelopt import (
    FullState,
    OdeOptions,
    default_gains,
    integrate_full,
    make_quadratic,
    primal_dual_field,
    terminal_check,
)
from accelopt.clf import control
from accelopt.dual import initial_state
from accelopt.integrators import rk4_step

GAINS = default_gains()


def test_field_equilibrium(quad):
    z = np.zeros(2)
    d = primal_dual_field(GAINS, quad, FullState(z, z, 0.0, z, z, 1.0))
    for part in (d.x, d.v, d.lambda_x, d.lambda_v):
        np.testing.assert_array_equal(part, 0.0)
    assert d.y == 0.0 and d.lambda_y == 0.0


def test_field_hand_values(half_square):
    one = np.ones(1)
    s = FullState(one, one, 0.5, -one, np.zeros(1), 1.0)
    d = primal_dual_field(GAINS, half_square, s)
    assert d.lambda_x[0] == -1.0
    assert d.lambda_v[0] == 0.0
    assert d.y == 1.0
    assert d.v[0] == control(GAINS, half_square, one, -one, one)[0] == -5.0


def test_field_abnormal_multiplier(half_square):
    one = np.ones(1)
    d = primal_dual_field(GAINS, half_square, FullState(one, 3 * one, 0.0, one, one, 0.0))
    assert d.lambda_x[0] == 0.0


def test_pack_roundtrip():
    s = FullState(np.array([1.0, 2.0]), np.array([3.0, 4.0]), 5.0, np.array([6.0, 7.0]), np.array([8.0, 9.0]), 1.0)
    r = FullState.unpack(s.pack())
    assert r.y == 5.0 and r.lambda_y == 1.0
    np.testing.assert_array_equal(r.lambda_v, [8.0, 9.0])


def test_initial_state(quad):
    s = initial_state(quad, [1.0, 1.0])
    np.testing.assert_array_equal(s.lambda_x, [-1.0, -10.0])
    assert s.y == quad.value(np.ones(2)) and s.lambda_y == 1.0
    np.testing.assert_array_equal(s.lambda_v, 0.0)
    np.testing.assert_array_equal(s.v, 0.0)


def test_quadratic_run(quad):
    trace, rep = integrate_full(GAINS, quad, [1.0, 1.0])
    assert trace.converged
    assert rep.within(1e-6)
    assert all(r.extra["costate_res"] <= 1e-6 for r in trace.records)
    term = terminal_check(trace, 1e-5)
    assert term.passed, term.failures


def test_lambda_y_constant(lse):
    z = initial_state(lse, [1.0, -2.0]).pack()
    for _ in range(100):
        z = rk4_step(lambda w: primal_dual_field(GAINS, lse, FullState.unpack(w)).pack(), z, 0.05)
    assert FullState.unpack(z).lambda_y == 1.0


def test_log_sum_exp_run(lse):
    trace, rep = integrate_full(GAINS, lse, [1.0, -0.5])
    assert trace.converged and rep.within(1e-6)


def test_start_at_minimum(quad):
    trace, rep = integrate_full(GAINS, quad, [0.0, 0.0])
    assert len(trace) == 1 and trace.converged
    assert rep.as_dict() == dict.fromkeys(rep.as_dict(), 0.0)


def test_inconsistent_start_keeps_defect(quad):
    x0 = np.array([1.0, 1.0])
    g0 = quad.grad(x0)
    trace, rep = integrate_full(GAINS, quad, x0, OdeOptions(max_steps=300), lambda_x0=g0)
    expected = 2 * np.linalg.norm(g0)
    res = np.array([r.extra["costate_res"] for r in trace.records])
    # the defect lambda_x + grad E is a linear invariant, which RK4 preserves
    np.testing.assert_allclose(res, expected, rtol=1e-12)
    assert rep.max_costate_residual == pytest.approx(expected, rel=1e-12)


def test_nonquadratic_defect_conserved(lse):
    x0 = np.array([0.7, -0.2])
    g0 = lse.grad(x0)
    _, rep = integrate_full(GAINS, lse, x0, OdeOptions(max_steps=300), lambda_x0=g0 + np.array([0.1, 0.0]))
    assert rep.max_costate_residual == pytest.approx(np.linalg.norm(2 * g0 + [0.1, 0.0]), rel=1e-6)


def test_terminal_check_preconditions(quad):
    trace, _ = integrate_full(GAINS, quad, [1.0, 1.0], OdeOptions(max_steps=10))
    assert trace.termination_reason == "max_steps"
    with pytest.raises(ValueError):
        terminal_check(trace, 1e-5)


def test_terminal_check_eps_zero(quad):
    trace, _ = integrate_full(GAINS, quad, [1.0, 1.0])
    rep = terminal_check(trace, 0.0)
    assert not rep.passed and len(rep.failures) == 3
    start, _ = integrate_full(GAINS, quad, [0.0, 0.0])
    assert terminal_check(start, 0.0).passed


def test_divergence(quad):
    stiff = make_quadratic(np.diag([1.0, 1e4]))
    trace, _ = integrate_full(GAINS, stiff, [1.0, 1.0], OdeOptions(step=0.1))
    assert trace.termination_reason == "diverged"
