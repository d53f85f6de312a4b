import numpy as np
import pytest
from scipy.linalg import expm

from accelopt import (
    OdeOptions,
    PrimalState,
    closed_loop_field,
    default_gains,
    integrate,
    make_quadratic,
    order_check,
)
from accelopt.ode import clf_monotone, solve_to
from accelopt.trace import DivergenceError

GAINS = default_gains()


def exact_linear_flow(Q, gammas, x0, v0, T):
    """Closed-loop solution on E = x'Qx/2 via the matrix exponential."""
    ga, gb, gc = gammas
    n = Q.shape[0]
    I = np.eye(n)
    M = np.block([[np.zeros((n, n)), I], [-ga * Q, -gb * I - gc * Q]])
    z = expm(M * T) @ np.concatenate([x0, v0])
    return z[:n], z[n:]


def test_field_examples(half_square, quad):
    dx, dv = closed_loop_field(GAINS, quad, PrimalState(np.zeros(2), np.zeros(2)))
    np.testing.assert_array_equal(dx, 0)
    np.testing.assert_array_equal(dv, 0)
    dx, dv = closed_loop_field(GAINS, half_square, PrimalState(np.ones(1), np.ones(1)))
    assert dx[0] == 1.0 and dv[0] == -5.0
    _, dv = closed_loop_field(GAINS, quad, PrimalState(np.ones(2), np.zeros(2)))
    np.testing.assert_array_equal(dv, [-1.0, -10.0])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_field_flags_nonfinite_gradient(quad):
    with pytest.raises(DivergenceError):
        closed_loop_field(GAINS, quad, PrimalState(np.array([np.inf, 0.0]), np.zeros(2)))


def test_options_validated():
    with pytest.raises(ValueError):
        OdeOptions(step=0.0)
    with pytest.raises(ValueError):
        OdeOptions(grad_tol=-1.0)
    with pytest.raises(ValueError):
        OdeOptions(method="leapfrog")


def test_start_at_minimum(quad):
    tr = integrate(GAINS, quad, PrimalState.at_rest(np.zeros(2)))
    assert tr.converged and len(tr) == 1


def test_equilibrium_never_moves(quad):
    s = solve_to(GAINS, quad, PrimalState.at_rest(np.zeros(2)), 1.0, 0.1, "rk4")
    np.testing.assert_array_equal(s.x, 0.0)
    np.testing.assert_array_equal(s.v, 0.0)


def test_quadratic_rk4_run(quad):
    tr = integrate(GAINS, quad, PrimalState.at_rest([1.0, 1.0]), OdeOptions(step=1e-2))
    assert tr.converged
    assert tr.final.grad_norm <= 1e-6
    assert clf_monotone(tr, 1e-9)
    assert np.all(tr.column("lie") <= 1e-9)
    t = tr.column("t")
    assert np.all(np.diff(t) > 0)


@pytest.mark.parametrize("T", [0.5, 2.0])
def test_rk4_against_matrix_exponential(quad, T):
    x0, v0 = np.array([1.0, -0.5]), np.array([0.2, 0.0])
    s = solve_to(GAINS, quad, PrimalState(x0, v0), T, 1e-2, "rk4")
    xe, ve = exact_linear_flow(np.diag([1.0, 10.0]), GAINS.gammas, x0, v0, T)
    np.testing.assert_allclose(s.x, xe, atol=1e-9)
    np.testing.assert_allclose(s.v, ve, atol=1e-8)


def test_v_dot_consistent_with_lie(quad):
    # forward difference of V against recorded Lie derivative: O(h), so halving h halves the gap
    gaps = []
    for h in (2e-2, 1e-2, 5e-3):
        tr = integrate(GAINS, quad, PrimalState.at_rest([1.0, 1.0]), OdeOptions(step=h, max_steps=int(round(0.2 / h))))
        V, lie = tr.column("V"), tr.column("lie")
        gaps.append(np.max(np.abs(np.diff(V) / h - lie[:-1])))
    assert gaps[1] / gaps[2] == pytest.approx(2.0, rel=0.15)
    assert gaps[0] / gaps[1] == pytest.approx(2.0, rel=0.15)


def test_rosenbrock_diagnostic(rosen):
    tr = integrate(GAINS, rosen, PrimalState.at_rest([-1.2, 1.0]), OdeOptions(step=5e-4, max_steps=2000))
    assert tr.termination_reason == "max_steps"
    assert tr.flags["convex"] is False
    assert "positive_lie_observed" in tr.flags


def test_divergence_detected():
    stiff = make_quadratic(np.diag([1.0, 1000.0]))
    tr = integrate(GAINS, stiff, PrimalState.at_rest([1.0, 1.0]), OdeOptions(step=0.1, method="euler"))
    assert tr.termination_reason == "diverged"


def test_order_check_ratios(quad):
    s0 = PrimalState.at_rest([1.0, 1.0])
    assert 1.7 <= order_check(GAINS, quad, s0, 1.0, 1e-2, "euler") <= 2.3
    assert 12 <= order_check(GAINS, quad, s0, 1.0, 1e-2, "rk4") <= 20


def test_order_check_rejects_unstable_step():
    stiff = make_quadratic(np.diag([1.0, 1000.0]))
    with pytest.raises(DivergenceError):
        order_check(GAINS, stiff, PrimalState.at_rest([1.0, 1.0]), 10.0, 0.1, "euler")


def test_order_check_needs_multiple(quad):
    with pytest.raises(ValueError):
        order_check(GAINS, quad, PrimalState.at_rest([1.0, 1.0]), 1.0, 0.3)
