"""Run a parsed experiment, write its CSV trace and JSON summary, and pick an exit code."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .discrete import check_equivalence, run
from .dual import integrate_full, terminal_check
from .objective import check_gradient
from .ode import CLF_SLACK, PrimalState, clf_monotone, integrate, order_check
from .trace import DIVERGED, DivergenceError, Trace

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

# acceptance thresholds
GRAD_CHECK_TOL = 1e-5
RESIDUAL_TOL = 1e-6
TERMINAL_EPS = 1e-5
EQUIVALENCE_TOL = 1e-10
EULER_RATIO = (1.7, 2.3)
RK4_RATIO = (12.0, 20.0)


@dataclass
class RunResult:
    exit_code: int
    summary: dict
    trace_path: Path
    summary_path: Path


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _trace_rows(trace: Trace, mode: str):
    first = trace.records[0] if trace.records else None
    n = 0 if first is None else np.size(first.x)
    xs = [f"x_{i}" for i in range(n)]
    if mode == "discrete":
        header = ["k", "E", "grad_norm", *xs]
        rows = [[str(int(r.t)), _fmt(r.E), _fmt(r.grad_norm), *map(_fmt, r.x)] for r in trace.records]
        return header, rows
    header = ["t", "E", "grad_norm", "V", "lieV", *xs, *(f"v_{i}" for i in range(n))]
    extra = ["y", "costate_res", "lambda_v_norm", "sweep_res"] if mode == "primal_dual" else []
    header += extra
    rows = []
    for r in trace.records:
        row = [_fmt(r.t), _fmt(r.E), _fmt(r.grad_norm), _fmt(r.V), _fmt(r.lie)]
        row += [_fmt(c) for c in r.x] + [_fmt(c) for c in r.v]
        row += [_fmt(r.extra[k]) for k in extra]
        rows.append(row)
    return header, rows


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _trace_summary(trace: Trace) -> dict:
    out = {"termination_reason": trace.termination_reason, "records": len(trace)}
    if trace.records:
        out["final_E"] = float(trace.final.E)
        out["final_grad_norm"] = float(trace.final.grad_norm)
        out["final_index"] = float(trace.final.t)
    return out


def _run_ode(cfg, f, gains, summary, checks):
    s0 = PrimalState(np.array(cfg.x0), np.array(cfg.v0))
    trace = integrate(gains, f, s0, cfg.ode)
    summary.update(_trace_summary(trace))
    summary["max_lieV"] = trace.flags["max_lie"]
    summary["warning.positive_lie_observed"] = trace.flags["positive_lie_observed"]
    if trace.termination_reason == DIVERGED:
        return trace
    if f.convex:
        checks["converged"] = trace.converged
        if cfg.ode.method == "rk4":
            checks["clf_monotone"] = clf_monotone(trace)
            checks["lie_nonpositive"] = bool(trace.flags["max_lie"] <= CLF_SLACK)
    else:
        summary["convexity_checks"] = "skipped: objective is not convex"
        if trace.flags["positive_lie_observed"]:
            log.warning("positive Lie derivative observed on non-convex objective %s", f.name)
    return trace


def _run_primal_dual(cfg, f, gains, summary, checks):
    trace, report = integrate_full(gains, f, np.array(cfg.x0), cfg.ode)
    summary.update(_trace_summary(trace))
    summary.update(report.as_dict())
    if trace.termination_reason == DIVERGED:
        return trace
    for name, value in report.as_dict().items():
        checks[name] = bool(value <= RESIDUAL_TOL)
    checks["converged"] = trace.converged
    if trace.converged:
        term = terminal_check(trace, TERMINAL_EPS)
        summary["terminal.lambda_x_norm"] = term.lambda_x_norm
        summary["terminal.v_norm"] = term.v_norm
        summary["terminal.grad_norm"] = term.grad_norm
        checks["terminal_transversality"] = term.passed
    return trace


def _run_discrete(cfg, f, gains, summary, checks):
    trace = run(cfg.algorithm, f, np.array(cfg.x0), cfg.schedule, cfg.ode.max_steps, cfg.ode.grad_tol)
    summary["algorithm"] = cfg.algorithm
    summary.update(_trace_summary(trace))
    if trace.termination_reason != DIVERGED:
        checks["converged"] = trace.converged
    return trace


def run_experiment(cfg: ExperimentConfig, output=None) -> RunResult:
    """Dispatch on ``cfg.mode``; exit code 0 iff every check recorded in the summary passes."""
    prefix = Path(output or cfg.output or "experiment")
    trace_path = prefix.with_name(prefix.name + ".csv")
    summary_path = prefix.with_name(prefix.name + ".summary.json")
    f = cfg.build_objective()
    gains = cfg.gains
    summary: dict = {
        "mode": cfg.mode,
        "objective": f.name,
        "dimension": f.dimension,
        "seed": cfg.seed,
        "gamma_a": gains.gamma_a,
        "gamma_b": gains.gamma_b,
        "gamma_c": gains.gamma_c,
    }
    checks: dict = {}

    if cfg.probes:
        rng = np.random.default_rng(cfg.seed)
        probes = rng.uniform(-2.0, 2.0, size=(cfg.probes, f.dimension))
        gc = check_gradient(f, probes, GRAD_CHECK_TOL)
        summary["grad_check.max_relative_error"] = gc.max_relative_error
        checks["grad_check"] = gc.passed

    diverged = False
    header, rows = [], []
    try:
        if cfg.mode == "ode":
            trace = _run_ode(cfg, f, gains, summary, checks)
        elif cfg.mode == "primal_dual":
            trace = _run_primal_dual(cfg, f, gains, summary, checks)
        elif cfg.mode == "discrete":
            trace = _run_discrete(cfg, f, gains, summary, checks)
        else:
            trace = None
        if trace is not None:
            diverged = trace.termination_reason == DIVERGED
            header, rows = _trace_rows(trace, cfg.mode)
        elif cfg.mode == "equivalence":
            worst, devs = check_equivalence(
                f, np.array(cfg.x0), cfg.schedule.alpha, cfg.schedule, cfg.n_iters, return_all=True
            )
            summary["max_relative_deviation"] = worst
            checks["equivalence"] = bool(worst <= EQUIVALENCE_TOL)
            header = ["k", "deviation"]
            rows = [[str(k), _fmt(d)] for k, d in enumerate(devs, start=1)]
        else:
            s0 = PrimalState(np.array(cfg.x0), np.array(cfg.v0))
            header = ["method", "h", "T", "ratio"]
            for method, (lo, hi) in (("euler", EULER_RATIO), ("rk4", RK4_RATIO)):
                ratio = order_check(gains, f, s0, cfg.T, cfg.ode.step, method)
                summary[f"order_ratio.{method}"] = ratio
                checks[f"order_{method}"] = bool(lo <= ratio <= hi)
                rows.append([method, _fmt(cfg.ode.step), _fmt(cfg.T), _fmt(ratio)])
    except DivergenceError as exc:
        diverged = True
        summary["error"] = str(exc)

    for name, ok in checks.items():
        summary[f"check.{name}"] = "pass" if ok else "fail"
    summary["diverged"] = diverged
    if diverged:
        code = EXIT_DIVERGED
    elif all(checks.values()):
        code = EXIT_OK
    else:
        code = EXIT_ASSERTION
    summary["passed"] = code == EXIT_OK
    summary["exit_code"] = code

    _write_csv(trace_path, header, rows)
    summary_path.parent.mkdir(parents=True, exist_ok=True)
    summary_path.write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n")
    return RunResult(code, summary, trace_path, summary_path)
