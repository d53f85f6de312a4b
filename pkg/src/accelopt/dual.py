"""Primal-dual flow: states (x, v, y) with costates (lambda_x, lambda_v, lambda_y).

    x' = v                 lambda_x' = -lambda_y H(x) v
    v' = u                 lambda_v' = -lambda_x - lambda_y grad E(x)
    y' = grad E(x) . v     lambda_y' = 0

with ``u`` the CLF feedback driven by the integrated ``lambda_x``. A start
with ``lambda_x = -grad E(x0)``, ``lambda_v = 0`` stays on the singular arc,
so ``lambda_x + grad E``, ``lambda_v`` and ``y - E(x)`` all remain zero up to
integration error; those quantities are what this module measures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clf import Gains, control, lie_derivative, lyapunov_value
from .integrators import get_stepper
from .objective import Objective
from .ode import OdeOptions
from .trace import CONVERGED, DIVERGED, MAX_STEPS, DivergenceError, Trace, TraceRecord, is_diverged

# cost multiplier; positive by normality, its scale is a convention
NU0 = 1.0


@dataclass(frozen=True)
class FullState:
    x: np.ndarray
    v: np.ndarray
    y: float
    lambda_x: np.ndarray
    lambda_v: np.ndarray
    lambda_y: float
    t: float = 0.0

    def pack(self) -> np.ndarray:
        return np.concatenate([self.x, self.v, [self.y], self.lambda_x, self.lambda_v, [self.lambda_y]])

    @classmethod
    def unpack(cls, z: np.ndarray, t: float = 0.0) -> "FullState":
        n = (z.size - 2) // 4
        return cls(
            z[:n], z[n : 2 * n], float(z[2 * n]),
            z[2 * n + 1 : 3 * n + 1], z[3 * n + 1 : 4 * n + 1], float(z[4 * n + 1]), t,
        )


@dataclass(frozen=True)
class ResidualReport:
    max_costate_residual: float
    max_lambda_v_norm: float
    max_lambda_v_dot_norm: float
    max_sweep_residual: float

    def within(self, tol: float) -> bool:
        return max(self.as_dict().values()) <= tol

    def as_dict(self) -> dict:
        return {
            "max_costate_residual": self.max_costate_residual,
            "max_lambda_v_norm": self.max_lambda_v_norm,
            "max_lambda_v_dot_norm": self.max_lambda_v_dot_norm,
            "max_sweep_residual": self.max_sweep_residual,
        }


def primal_dual_field(gains: Gains, f: Objective, s: FullState) -> FullState:
    """Time derivative of every component, returned as a :class:`FullState` (``t`` is 0)."""
    g = f.grad(s.x)
    hv = f.hvp(s.x, s.v)
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(hv))):
        raise DivergenceError("non-finite gradient or Hessian product")
    u = control(gains, f, s.x, s.lambda_x, s.v, hv=hv)
    return FullState(
        x=np.array(s.v, dtype=float),
        v=u,
        y=float(g @ s.v),
        lambda_x=-s.lambda_y * hv,
        lambda_v=-s.lambda_x - s.lambda_y * g,
        lambda_y=0.0,
    )


def initial_state(f: Objective, x0, lambda_x0=None) -> FullState:
    """Rest start on the singular arc; ``lambda_x0`` overrides the costate for defect studies."""
    x0 = np.array(x0, dtype=float)
    lam = -NU0 * np.asarray(f.grad(x0), dtype=float) if lambda_x0 is None else np.array(lambda_x0, dtype=float)
    return FullState(x0, np.zeros_like(x0), f.value(x0), lam, np.zeros_like(x0), NU0)


def integrate_full(
    gains: Gains, f: Objective, x0, opts: OdeOptions = OdeOptions(), *, lambda_x0=None
) -> tuple[Trace, ResidualReport]:
    s = initial_state(f, x0, lambda_x0)
    z = s.pack()
    stepper = get_stepper(opts.method)
    h = float(opts.step)
    clf = gains.clf

    def field(z):
        return primal_dual_field(gains, f, FullState.unpack(z)).pack()

    trace = Trace(index="t")
    sup = dict.fromkeys(("costate", "lv", "lvdot", "sweep"), 0.0)
    for k in range(opts.max_steps + 1):
        s = FullState.unpack(z, k * h)
        if is_diverged(s.x, z) or is_diverged(s.x, g := f.grad(s.x)):
            trace.termination_reason = DIVERGED
            break
        lam_v_dot = -s.lambda_x - s.lambda_y * g
        res = {
            "y": s.y,
            "costate_res": float(np.linalg.norm(s.lambda_x + NU0 * g)),
            "lambda_v_norm": float(np.linalg.norm(s.lambda_v)),
            "sweep_res": abs(s.y - f.value(s.x)),
        }
        sup["costate"] = max(sup["costate"], res["costate_res"])
        sup["lv"] = max(sup["lv"], res["lambda_v_norm"])
        sup["lvdot"] = max(sup["lvdot"], float(np.linalg.norm(lam_v_dot)))
        sup["sweep"] = max(sup["sweep"], res["sweep_res"])
        gn = float(np.linalg.norm(g))
        trace.records.append(
            TraceRecord(
                t=k * h,
                x=s.x.copy(),
                v=s.v.copy(),
                E=f.value(s.x),
                grad_norm=gn,
                V=lyapunov_value(clf, s.lambda_x, s.v),
                lie=lie_derivative(clf, gains, f, s.x, s.lambda_x, s.v),
                lambda_x=s.lambda_x.copy(),
                extra=res,
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
    report = ResidualReport(sup["costate"], sup["lv"], sup["lvdot"], sup["sweep"])
    return trace, report


@dataclass(frozen=True)
class TerminalReport:
    lambda_x_norm: float
    v_norm: float
    grad_norm: float
    eps: float
    failures: tuple

    @property
    def passed(self) -> bool:
        return not self.failures


def terminal_check(trace: Trace, eps: float) -> TerminalReport:
    """Check ``|lambda_x(t_f)|``, ``|v(t_f)|`` and ``|grad E(x(t_f))|`` against ``eps``."""
    if not trace.converged:
        raise ValueError(f"terminal check needs a converged trace, got {trace.termination_reason!r}")
    last = trace.final
    lam = last.lambda_x if last.lambda_x is not None else np.zeros_like(last.x)
    norms = {
        "lambda_x": float(np.linalg.norm(lam)),
        "v": float(np.linalg.norm(last.v)),
        "grad": float(last.grad_norm),
    }
    failures = tuple(f"|{k}(t_f)| = {val:.3e} > {eps:g}" for k, val in norms.items() if not val <= eps)
    return TerminalReport(norms["lambda_x"], norms["v"], norms["grad"], float(eps), failures)
