"""Discrete momentum iterations.

* two-step Nesterov: ``x_k = y_k - a g(y_k)``, ``y_{k+1} = x_k + b_k (x_k - x_{k-1})``
* heavy ball: ``x_{k+1} = x_k - a g_k + b_k (x_k - x_{k-1})``
* derived update: heavy ball minus ``c_k (g_k - g_{k-1})``
* single-sequence Nesterov: the derived update with ``c_k = a b_k``

All runs start at rest: ``x_{-1} = x_0``, ``y_1 = x_0`` and the cached
previous gradient is ``g(x_0)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .clf import Gains
from .objective import Objective
from .trace import CONVERGED, DIVERGED, MAX_STEPS, DivergenceError, Trace, TraceRecord, is_diverged


@dataclass(frozen=True)
class IterateState:
    """Iterate memory.

    For the two-step Nesterov form ``y_curr`` is the next gradient query
    point and ``x_curr`` the last ``x`` iterate. For the single-sequence
    forms ``x_curr`` is the query point and ``y_curr`` mirrors it.
    ``g_prev`` is the gradient at the previous query point.
    """

    x_curr: np.ndarray
    x_prev: np.ndarray
    y_curr: np.ndarray
    g_prev: np.ndarray
    k: int = 0

    @classmethod
    def at_rest(cls, f: Objective, x0) -> "IterateState":
        x0 = np.array(x0, dtype=float)
        return cls(x0, x0, x0, np.asarray(f.grad(x0), dtype=float), 0)


@dataclass(frozen=True)
class Schedule:
    """Step size ``alpha`` and momentum ``beta_k`` for iteration ``k >= 1``.

    ``nesterov_convex`` uses ``(k - 1) / (k + 2)``. ``gamma_const``, when set,
    fixes the gradient-correction coefficient of :func:`derived_step` in
    :func:`run`; otherwise it is ``alpha * beta_k``.
    """

    kind: str = "nesterov_convex"
    alpha: float = 0.1
    beta_const: float = 0.0
    gamma_const: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("nesterov_convex", "constant"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.kind == "constant" and not 0.0 <= self.beta_const < 1.0:
            raise ValueError(f"beta_const must lie in [0, 1), got {self.beta_const}")

    def beta(self, k: int) -> float:
        if self.kind == "constant":
            return float(self.beta_const)
        return (k - 1) / (k + 2)

    def gamma(self, k: int) -> float:
        if self.gamma_const is not None:
            return float(self.gamma_const)
        return self.alpha * self.beta(k)


def _check(*arrays):
    if is_diverged(*arrays):
        raise DivergenceError("iterate left the finite region")


def _require_alpha(alpha):
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")


def gradient_descent_step(f: Objective, s: IterateState, alpha: float) -> IterateState:
    _require_alpha(alpha)
    g = f.grad(s.x_curr)
    x_new = s.x_curr - alpha * g
    _check(x_new, g)
    return IterateState(x_new, s.x_curr, x_new, g, s.k + 1)


def nesterov_step(f: Objective, s: IterateState, alpha: float, beta_k: float) -> IterateState:
    _require_alpha(alpha)
    g = f.grad(s.y_curr)
    x_k = s.y_curr - alpha * g
    y_next = x_k + beta_k * (x_k - s.x_curr)
    _check(y_next, g)
    return IterateState(x_k, s.x_curr, y_next, g, s.k + 1)


def heavy_ball_step(f: Objective, s: IterateState, alpha: float, beta_k: float) -> IterateState:
    _require_alpha(alpha)
    g = f.grad(s.x_curr)
    x_new = s.x_curr - alpha * g + beta_k * (s.x_curr - s.x_prev)
    _check(x_new, g)
    return IterateState(x_new, s.x_curr, x_new, g, s.k + 1)


def derived_step(
    f: Objective, s: IterateState, alpha: float, beta_k: float, gamma_k: float
) -> IterateState:
    _require_alpha(alpha)
    g = f.grad(s.x_curr)
    x_new = s.x_curr - alpha * g + beta_k * (s.x_curr - s.x_prev) - gamma_k * (g - s.g_prev)
    _check(x_new, g)
    return IterateState(x_new, s.x_curr, x_new, g, s.k + 1)


def nesterov_single_sequence_step(
    f: Objective, s: IterateState, alpha: float, beta_k: float
) -> IterateState:
    """One-sequence Nesterov; the derived update with ``gamma_k = alpha * beta_k``."""
    return derived_step(f, s, alpha, beta_k, alpha * beta_k)


ALGORITHMS = ("nesterov", "nesterov_single", "heavy_ball", "derived", "gradient_descent")


def _query_point(algorithm: str, s: IterateState) -> np.ndarray:
    return s.y_curr if algorithm == "nesterov" else s.x_curr


def _advance(algorithm: str, f: Objective, s: IterateState, schedule: Schedule) -> IterateState:
    k = s.k + 1
    a, b = schedule.alpha, schedule.beta(k)
    if algorithm == "nesterov":
        return nesterov_step(f, s, a, b)
    if algorithm == "nesterov_single":
        return nesterov_single_sequence_step(f, s, a, b)
    if algorithm == "heavy_ball":
        return heavy_ball_step(f, s, a, b)
    if algorithm == "derived":
        return derived_step(f, s, a, b, schedule.gamma(k))
    return gradient_descent_step(f, s, a)


def run(
    algorithm: str,
    f: Objective,
    x0,
    schedule: Schedule,
    max_iters: int = 10_000,
    grad_tol: float = 1e-8,
) -> Trace:
    """Iterate until ``|grad E| <= grad_tol`` at the query point, ``max_iters``, or blow-up.

    Records are taken at the gradient query point (``y_k`` for two-step
    Nesterov, ``x_k`` otherwise).
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    s = IterateState.at_rest(f, x0)
    trace = Trace(index="k")
    while True:
        p = _query_point(algorithm, s)
        g = f.grad(p)
        if is_diverged(p, g):
            trace.termination_reason = DIVERGED
            break
        gn = float(np.linalg.norm(g))
        trace.records.append(TraceRecord(t=s.k, x=p.copy(), E=f.value(p), grad_norm=gn))
        if gn <= grad_tol:
            trace.termination_reason = CONVERGED
            break
        if s.k >= max_iters:
            trace.termination_reason = MAX_STEPS
            break
        try:
            s = _advance(algorithm, f, s, schedule)
        except DivergenceError:
            trace.termination_reason = DIVERGED
            break
    return trace


def _relative_deviation(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.linalg.norm(a)), float(np.linalg.norm(b)))
    diff = float(np.linalg.norm(a - b))
    return 0.0 if diff == 0.0 else diff / scale


def check_equivalence(
    f: Objective, x0, alpha: float, schedule: Schedule, n_iters: int, *, return_all: bool = False
):
    """Max relative gap between two-step Nesterov ``y_k`` and the derived update with ``gamma_k = alpha beta_k``.

    The derived run starts at rest (``x_{-1} = x_0``, ``g_prev = g(x_0)``).
    The two-step run starts from ``y_1 = x_0`` with its previous ``x``
    iterate set to ``x_0 - alpha g(x_0)``, the value consistent with a rest
    start ``y_0 = y_1``; this makes the identity exact for every schedule and
    changes nothing when ``beta_1 = 0``.
    """
    _require_alpha(alpha)
    if schedule.gamma_const is not None:
        raise ValueError("equivalence needs gamma_k = alpha * beta_k, not a constant gamma")
    sched = replace(schedule, alpha=float(alpha))
    x0 = np.array(x0, dtype=float)
    g0 = np.asarray(f.grad(x0), dtype=float)
    x_init = x0 - sched.alpha * g0
    two_step = IterateState(x_init, x_init, x0, g0, 0)
    derived = IterateState.at_rest(f, x0)
    devs = []
    for k in range(1, n_iters + 1):
        b = sched.beta(k)
        two_step = nesterov_step(f, two_step, sched.alpha, b)
        derived = derived_step(f, derived, sched.alpha, b, sched.alpha * b)
        devs.append(_relative_deviation(two_step.y_curr, derived.x_curr))
    worst = max(devs, default=0.0)
    return (worst, devs) if return_all else worst


def ode_matched_coefficients(gains: Gains, h: float) -> tuple[float, float, float]:
    """``(alpha, beta, gamma)`` that make :func:`derived_step` a finite-difference scheme for the closed-loop ODE.

    With ``v_k = (x_k - x_{k-1}) / h`` and ``H v ~ (g_k - g_{k-1}) / h``
    the ODE gives ``alpha = h^2 gamma_a``, ``beta = 1 - h gamma_b`` and
    ``gamma = h gamma_c``.
    """
    return h * h * gains.gamma_a, 1.0 - h * gains.gamma_b, h * gains.gamma_c


def run_matched(gains: Gains, f: Objective, x0, h: float, n_steps: int) -> np.ndarray:
    """Iterates ``x_0..x_n`` of the ODE-matched derived update, from rest."""
    alpha, beta, gamma = ode_matched_coefficients(gains, h)
    s = IterateState.at_rest(f, x0)
    xs = [s.x_curr]
    for _ in range(n_steps):
        s = derived_step(f, s, alpha, beta, gamma)
        xs.append(s.x_curr)
    return np.array(xs)
