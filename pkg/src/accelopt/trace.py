"""Run records shared by the ODE, primal-dual and discrete drivers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

CONVERGED = "converged"
MAX_STEPS = "max_steps"
DIVERGED = "diverged"

# any |x| beyond this counts as blow-up
DIVERGENCE_NORM = 1e12


class DivergenceError(ArithmeticError):
    """A run produced non-finite values or left the divergence ball."""


def is_diverged(x, *others) -> bool:
    """Non-finite entries anywhere, or ``|x|`` beyond :data:`DIVERGENCE_NORM`."""
    for a in (x, *others):
        if not math.isfinite(float(np.sum(np.abs(a)))):
            return True
    return float(np.linalg.norm(x)) > DIVERGENCE_NORM


@dataclass
class TraceRecord:
    t: float
    x: np.ndarray
    E: float
    grad_norm: float
    v: Optional[np.ndarray] = None
    V: Optional[float] = None
    lie: Optional[float] = None
    lambda_x: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)


@dataclass
class Trace:
    """Records indexed by time ``t`` (ODE runs) or iteration ``k`` (discrete runs)."""

    index: str = "t"
    records: list = field(default_factory=list)
    termination_reason: Optional[str] = None
    flags: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i) -> TraceRecord:
        return self.records[i]

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]

    @property
    def converged(self) -> bool:
        return self.termination_reason == CONVERGED

    def column(self, name: str) -> np.ndarray:
        if name in ("t", "E", "grad_norm", "V", "lie"):
            return np.array([getattr(r, name) for r in self.records], dtype=float)
        if name in ("x", "v", "lambda_x"):
            return np.array([getattr(r, name) for r in self.records], dtype=float)
        return np.array([r.extra[name] for r in self.records], dtype=float)
