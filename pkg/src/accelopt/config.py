"""Flat ``key = value`` experiment configs with dotted section prefixes.

Example::

    # comments start with '#'
    mode = ode
    objective.name = quadratic
    objective.spectrum = 1, 10
    clf.c = -1.0
    numeric.h = 0.01

Vectors are comma separated; matrices separate rows with ';'.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from .clf import ClfParams, ClfParamsError, Gains, clf_violations, derive_gains
from .discrete import ALGORITHMS, Schedule
from .integrators import STEPPERS
from .objective import Objective, make_log_sum_exp, make_quadratic, make_rosenbrock
from .ode import OdeOptions

MODES = ("ode", "primal_dual", "discrete", "equivalence", "order_check")
OBJECTIVES = ("quadratic", "log_sum_exp", "rosenbrock")

DEFAULT_LSE_ROWS = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]


@dataclass(frozen=True)
class ConfigIssue:
    line: Optional[int]
    key: str
    message: str

    def __str__(self):
        where = f"line {self.line}" if self.line is not None else "config"
        return f"{where}: {self.key}: {self.message}"


class ConfigError(ValueError):
    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("\n".join(str(i) for i in self.issues))


def _float(s: str) -> float:
    return float(s)


def _int(s: str) -> int:
    value = float(s)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {s!r}")
    return int(value)


def _vector(s: str) -> list:
    return [float(p) for p in s.replace(",", " ").split()]


def _matrix(s: str) -> list:
    rows = [_vector(r) for r in s.split(";") if r.strip()]
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValueError("matrix rows must be non-empty and of equal length")
    return rows


def _choice(options) -> Callable[[str], str]:
    def parse(s: str) -> str:
        if s not in options:
            raise ValueError(f"unknown value {s!r}; expected one of {', '.join(options)}")
        return s

    return parse


# key -> (parser, default); a None default means "unset"
SCHEMA: dict[str, tuple[Callable[[str], Any], Any]] = {
    "mode": (_choice(MODES), "ode"),
    "algorithm": (_choice(ALGORITHMS), "nesterov"),
    "objective.name": (_choice(OBJECTIVES), "quadratic"),
    "objective.spectrum": (_vector, [1.0, 10.0]),
    "objective.matrix": (_matrix, None),
    "objective.b": (_vector, None),
    "objective.rows": (_matrix, DEFAULT_LSE_ROWS),
    "objective.rho": (_float, 1.0),
    "x0": (_vector, None),
    "v0": (_vector, None),
    "clf.a": (_float, 2.0),
    "clf.b": (_float, 2.0),
    "clf.c": (_float, -1.0),
    "clf.K_a": (_float, 1.0),
    "schedule.kind": (_choice(("nesterov_convex", "constant")), "nesterov_convex"),
    "schedule.alpha": (_float, 0.1),
    "schedule.beta_const": (_float, 0.0),
    "schedule.gamma": (_float, None),
    "numeric.h": (_float, 1e-2),
    "numeric.max_steps": (_int, 10**6),
    "numeric.grad_tol": (_float, 1e-6),
    "numeric.method": (_choice(tuple(STEPPERS)), "rk4"),
    "numeric.T": (_float, 1.0),
    "numeric.n_iters": (_int, 200),
    "numeric.probes": (_int, 10),
    "seed": (_int, 0),
    "output": (str, None),
}


@dataclass(frozen=True)
class ObjectiveSpec:
    name: str
    params: dict

    def build(self) -> Objective:
        if self.name == "quadratic":
            Q = self.params.get("matrix")
            Q = np.diag(self.params["spectrum"]) if Q is None else np.array(Q)
            return make_quadratic(Q, self.params.get("b"))
        if self.name == "log_sum_exp":
            return make_log_sum_exp(np.array(self.params["rows"]), self.params["rho"])
        return make_rosenbrock()


@dataclass(frozen=True)
class ExperimentConfig:
    objective: ObjectiveSpec
    mode: str
    algorithm: str
    clf: ClfParams
    K_a: float
    schedule: Schedule
    ode: OdeOptions
    x0: tuple
    v0: tuple
    T: float = 1.0
    n_iters: int = 200
    probes: int = 10
    seed: int = 0
    output: Optional[str] = None
    values: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def gains(self) -> Gains:
        return derive_gains(self.clf, self.K_a)

    def build_objective(self) -> Objective:
        return self.objective.build()


def _default_x0(name: str, n: int) -> list:
    if name == "rosenbrock":
        return [-1.2, 1.0]
    return [1.0] * n


def parse_config(text: str) -> ExperimentConfig:
    """Parse and fully validate a config; raise :class:`ConfigError` listing every problem."""
    issues: list[ConfigIssue] = []
    lines: dict[str, int] = {}
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            issues.append(ConfigIssue(lineno, line, "expected 'key = value'"))
            continue
        key, _, val = (p.strip() for p in line.partition("="))
        if key not in SCHEMA:
            issues.append(ConfigIssue(lineno, key, "unknown key"))
            continue
        if key in lines:
            issues.append(ConfigIssue(lineno, key, f"duplicate key (first set on line {lines[key]})"))
            continue
        lines[key] = lineno
        try:
            values[key] = SCHEMA[key][0](val)
        except ValueError as exc:
            issues.append(ConfigIssue(lineno, key, f"bad value: {exc}"))

    def get(key):
        return values.get(key, SCHEMA[key][1])

    def issue(key, message):
        # derived constraints anchor to the key itself, else to its section
        line = lines.get(key)
        if line is None and "." in key:
            section = key.split(".")[0] + "."
            line = next((n for k, n in lines.items() if k.startswith(section)), None)
        issues.append(ConfigIssue(line, key, message))

    # constraint checks only run on keys that parsed
    for msg in clf_violations(get("clf.a"), get("clf.b"), get("clf.c")):
        issue({"a": "clf.a", "b": "clf.b"}.get(msg.split()[0], "clf.c"), msg)
    if not get("clf.K_a") > 0:
        issue("clf.K_a", f"K_a > 0 violated (K_a = {get('clf.K_a')!r})")

    name = get("objective.name")
    spec = ObjectiveSpec(
        name,
        {
            "spectrum": get("objective.spectrum"),
            "matrix": get("objective.matrix"),
            "b": get("objective.b"),
            "rows": get("objective.rows"),
            "rho": get("objective.rho"),
        },
    )
    objective = None
    try:
        objective = spec.build()
    except ValueError as exc:
        issue(next((k for k in lines if k.startswith("objective.")), "objective.name"), str(exc))

    x0 = get("x0")
    v0 = get("v0")
    if objective is not None:
        n = objective.dimension
        if x0 is None:
            x0 = _default_x0(name, n)
        if v0 is None:
            v0 = [0.0] * n
        if len(x0) != n:
            issue("x0", f"dimension {len(x0)} does not match objective dimension {n}")
        if len(v0) != n:
            issue("v0", f"dimension {len(v0)} does not match objective dimension {n}")

    schedule = ode = None
    try:
        schedule = Schedule(get("schedule.kind"), get("schedule.alpha"), get("schedule.beta_const"), get("schedule.gamma"))
    except ValueError as exc:
        issue(next((k for k in lines if k.startswith("schedule.")), "schedule.kind"), str(exc))
    try:
        ode = OdeOptions(get("numeric.h"), get("numeric.max_steps"), get("numeric.grad_tol"), get("numeric.method"))
    except ValueError as exc:
        issue(next((k for k in lines if k.startswith("numeric.")), "numeric.h"), str(exc))
    if not get("numeric.T") > 0:
        issue("numeric.T", "T must be positive")
    if get("numeric.n_iters") < 0:
        issue("numeric.n_iters", "n_iters must be nonnegative")
    if get("numeric.probes") < 0:
        issue("numeric.probes", "probes must be nonnegative")
    if get("mode") == "order_check" and ode is not None:
        T, h = get("numeric.T"), get("numeric.h")
        if abs(round(T / h) * h - T) > 1e-9 * max(1.0, T):
            issue("numeric.T", f"T = {T} is not a multiple of h = {h}")
    if get("mode") == "equivalence" and get("schedule.gamma") is not None:
        issue("schedule.gamma", "equivalence mode uses gamma_k = alpha * beta_k; remove schedule.gamma")

    if issues:
        raise ConfigError(sorted(issues, key=lambda i: (i.line is None, i.line or 0)))
    try:
        clf = ClfParams(get("clf.a"), get("clf.b"), get("clf.c"))
    except ClfParamsError as exc:  # pragma: no cover - caught above
        raise ConfigError([ConfigIssue(None, "clf", str(exc))]) from exc
    return ExperimentConfig(
        objective=spec,
        mode=get("mode"),
        algorithm=get("algorithm"),
        clf=clf,
        K_a=get("clf.K_a"),
        schedule=schedule,
        ode=ode,
        x0=tuple(x0),
        v0=tuple(v0),
        T=get("numeric.T"),
        n_iters=get("numeric.n_iters"),
        probes=get("numeric.probes"),
        seed=get("seed"),
        output=get("output"),
        values=dict(values),
    )
