"""Closed-loop second-order flow

    x'' + gamma_a grad E(x) + gamma_b x' + gamma_c H(x) x' = 0

integrated with fixed-step Euler or RK4, monitoring the CLF along the way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clf import Gains, lie_derivative, lyapunov_value
from .integrators import get_stepper
from .objective import Objective
from .trace import (
    CONVERGED,
    DIVERGED,
    MAX_STEPS,
    DivergenceError,
    Trace,
    TraceRecord,
    is_diverged,
)

# slack allowed on V increments and on the sign of the Lie derivative
CLF_SLACK = 1e-9


@dataclass(frozen=True)
class PrimalState:
    x: np.ndarray
    v: np.ndarray
    t: float = 0.0

    @classmethod
    def at_rest(cls, x0, t: float = 0.0) -> "PrimalState":
        x0 = np.array(x0, dtype=float)
        return cls(x0, np.zeros_like(x0), t)

    def __post_init__(self):
        if np.shape(self.x) != np.shape(self.v):
            raise ValueError("x and v must have equal dimension")


@dataclass(frozen=True)
class OdeOptions:
    step: float = 1e-2
    max_steps: int = 10**6
    grad_tol: float = 1e-6
    method: str = "rk4"

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if not self.grad_tol > 0:
            raise ValueError(f"grad_tol must be positive, got {self.grad_tol}")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ValueError(f"max_steps must be a positive integer, got {self.max_steps}")
        get_stepper(self.method)


def closed_loop_field(gains: Gains, f: Objective, s: PrimalState):
    """Return ``(dx, dv)`` with ``dv = -gamma_a g - gamma_b v - gamma_c H v``."""
    x = np.asarray(s.x, dtype=float)
    v = np.asarray(s.v, dtype=float)
    g = f.grad(x)
    if not np.all(np.isfinite(g)):
        raise DivergenceError("non-finite gradient")
    dv = -gains.gamma_a * g - gains.gamma_b * v - gains.gamma_c * f.hvp(x, v)
    return v.copy(), dv


def _packed_field(gains: Gains, f: Objective, n: int):
    ga, gb, gc = gains.gammas

    # non-finite stages propagate into z and are caught by the caller
    def field(z):
        x, v = z[:n], z[n:]
        return np.concatenate([v, -ga * f.grad(x) - gb * v - gc * f.hvp(x, v)])

    return field


def integrate(gains: Gains, f: Objective, s0: PrimalState, opts: OdeOptions = OdeOptions()) -> Trace:
    """Integrate from ``s0`` until ``|grad E| <= grad_tol``, the step budget runs out, or blow-up.

    Each record carries ``V`` and its Lie derivative evaluated with the
    singular-arc costate ``lambda_x = -grad E(x)``. On objectives not flagged
    convex the sign of the Lie derivative is only reported, under
    ``trace.flags["positive_lie_observed"]``.
    """
    clf = gains.clf
    n = np.size(s0.x)
    field = _packed_field(gains, f, n)
    stepper = get_stepper(opts.method)
    h = float(opts.step)
    z = np.concatenate([np.asarray(s0.x, dtype=float), np.asarray(s0.v, dtype=float)])
    trace = Trace(index="t")
    max_lie = -np.inf
    for k in range(opts.max_steps + 1):
        x, v = z[:n], z[n:]
        if is_diverged(x, v) or is_diverged(x, g := f.grad(x)):
            trace.termination_reason = DIVERGED
            break
        lam = -g
        lie = lie_derivative(clf, gains, f, x, lam, v)
        max_lie = max(max_lie, lie)
        gn = float(np.linalg.norm(g))
        trace.records.append(
            TraceRecord(
                t=s0.t + k * h,
                x=x.copy(),
                v=v.copy(),
                E=f.value(x),
                grad_norm=gn,
                V=lyapunov_value(clf, lam, v),
                lie=lie,
            )
        )
        if gn <= opts.grad_tol:
            trace.termination_reason = CONVERGED
            break
        if k == opts.max_steps:
            trace.termination_reason = MAX_STEPS
            break
        try:
            z = stepper(field, z, h)
        except DivergenceError:
            trace.termination_reason = DIVERGED
            break
    trace.flags["convex"] = bool(f.convex)
    trace.flags["max_lie"] = float(max_lie)
    trace.flags["positive_lie_observed"] = bool(max_lie > CLF_SLACK)
    return trace


def clf_monotone(trace: Trace, slack: float = CLF_SLACK) -> bool:
    """True iff ``V`` never rises by more than ``slack`` between consecutive records."""
    V = trace.column("V")
    return bool(np.all(np.diff(V) <= slack))


def solve_to(gains: Gains, f: Objective, s0: PrimalState, T: float, h: float, method: str) -> PrimalState:
    """Advance exactly ``T / h`` fixed steps with no stopping test."""
    nsteps = int(round(T / h))
    if nsteps < 1 or abs(nsteps * h - T) > 1e-9 * max(1.0, abs(T)):
        raise ValueError(f"T = {T} is not a positive multiple of h = {h}")
    n = np.size(s0.x)
    field = _packed_field(gains, f, n)
    stepper = get_stepper(method)
    z = np.concatenate([np.asarray(s0.x, dtype=float), np.asarray(s0.v, dtype=float)])
    for _ in range(nsteps):
        z = stepper(field, z, h)
        if is_diverged(z[:n], z[n:]):
            raise DivergenceError(f"{method} run with h = {h} diverged")
    return PrimalState(z[:n], z[n:], s0.t + nsteps * h)


def order_check(
    gains: Gains, f: Objective, s0: PrimalState, T: float, h: float, method: str = "euler"
) -> float:
    """Error ratio ``err(h) / err(h/2)`` at time ``T`` against RK4 with step ``h/100``.

    About 2 for a first-order method and 16 for RK4.
    """
    ref = solve_to(gains, f, s0, T, h / 100.0, "rk4").x
    e1 = np.linalg.norm(solve_to(gains, f, s0, T, h, method).x - ref)
    e2 = np.linalg.norm(solve_to(gains, f, s0, T, h / 2.0, method).x - ref)
    if e2 == 0.0:
        raise ArithmeticError("half-step error is exactly zero; ratio undefined")
    return float(e1 / e2)
