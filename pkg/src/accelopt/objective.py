"""Objective functions with gradients and Hessian-vector products.

The Hessian is only ever touched through products ``H(x) @ v``; no routine
here builds a full Hessian matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

Array = np.ndarray

_SQRT_EPS = float(np.sqrt(np.finfo(float).eps))


@dataclass(frozen=True)
class Objective:
    """A smooth scalar function ``E: R^n -> R``.

    ``hess_vec`` is optional; without it :meth:`hvp` falls back to a forward
    difference of the gradient.
    """

    dimension: int
    value: Callable[[Array], float]
    grad: Callable[[Array], Array]
    hess_vec: Optional[Callable[[Array, Array], Array]] = None
    name: str = "objective"
    convex: bool = False

    def __call__(self, x) -> float:
        return self.value(np.asarray(x, dtype=float))

    def hvp(self, x, v) -> Array:
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.hess_vec is None:
            return hvp_finite_difference(self, x, v)
        return self.hess_vec(x, v)


@dataclass(frozen=True)
class GradCheckReport:
    max_relative_error: float
    probe_count: int
    worst_coordinate: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_relative_error <= self.tol


def _frozen(a) -> Array:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def make_quadratic(Q, b=None) -> Objective:
    """``E(x) = 0.5 x'Qx - b'x`` with exact gradient ``Qx - b`` and Hessian ``Q``."""
    Q = _frozen(np.atleast_2d(Q))
    n = Q.shape[0]
    if Q.shape != (n, n):
        raise ValueError(f"Q must be square, got shape {Q.shape}")
    asym = float(np.max(np.abs(Q - Q.T))) if n else 0.0
    if asym > 1e-12:
        raise ValueError(f"Q is not symmetric (max asymmetry {asym:.3e})")
    b = _frozen(np.zeros(n) if b is None else np.atleast_1d(b))
    if b.shape != (n,):
        raise ValueError(f"b has shape {b.shape}, expected ({n},)")
    # eigvalsh only decides the convexity flag; the Hessian is Q itself
    convex = bool(np.linalg.eigvalsh(Q).min() >= -1e-12)

    def value(x):
        return float(0.5 * x @ (Q @ x) - b @ x)

    def grad(x):
        return Q @ x - b

    def hess_vec(x, v):
        return Q @ v

    return Objective(n, value, grad, hess_vec, name="quadratic", convex=convex)


def make_log_sum_exp(A, rho: float = 1.0) -> Objective:
    """``E(x) = rho * log(sum_i exp(a_i'x / rho))`` for the rows ``a_i`` of ``A``.

    Evaluated with the max-shift so large ``|x|`` cannot overflow.
    """
    A = _frozen(np.atleast_2d(A))
    rho = float(rho)
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    n = A.shape[1]

    def weights(x):
        z = A @ x / rho
        w = np.exp(z - z.max())
        return w / w.sum()

    def value(x):
        z = A @ x / rho
        m = z.max()
        return float(rho * (m + np.log(np.exp(z - m).sum())))

    def grad(x):
        return A.T @ weights(x)

    def hess_vec(x, v):
        p = weights(x)
        Av = A @ v
        return A.T @ (p * Av - p * (p @ Av)) / rho

    return Objective(n, value, grad, hess_vec, name="log_sum_exp", convex=True)


def make_rosenbrock() -> Objective:
    """Two-dimensional Rosenbrock function; non-convex, minimum at (1, 1)."""

    def value(x):
        return float((1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2)

    def grad(x):
        r = x[1] - x[0] ** 2
        return np.array([-2.0 * (1.0 - x[0]) - 400.0 * x[0] * r, 200.0 * r])

    def hess_vec(x, v):
        h11 = 2.0 - 400.0 * x[1] + 1200.0 * x[0] ** 2
        h12 = -400.0 * x[0]
        return np.array([h11 * v[0] + h12 * v[1], h12 * v[0] + 200.0 * v[1]])

    return Objective(2, value, grad, hess_vec, name="rosenbrock", convex=False)


def hvp_finite_difference(f: Objective, x, v) -> Array:
    """Forward-difference Hessian-vector product from two gradient calls."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    vnorm = float(np.linalg.norm(v))
    if vnorm == 0.0:
        return np.zeros_like(x)
    eps = _SQRT_EPS * (1.0 + float(np.linalg.norm(x))) / vnorm
    return (f.grad(x + eps * v) - f.grad(x)) / eps


def check_gradient(f: Objective, x, tol: float = 1e-5) -> GradCheckReport:
    """Compare ``f.grad`` with central differences, coordinate by coordinate.

    ``x`` may be a single point or a stack of probe points (one per row).
    The error of each coordinate is ``|fd - g| / max(1, |g|)``, so it is
    relative for large gradients and absolute near stationary points.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    probes = np.atleast_2d(np.asarray(x, dtype=float))
    worst, worst_j = 0.0, 0
    for p in probes:
        g = np.asarray(f.grad(p), dtype=float)
        eps = _SQRT_EPS * (1.0 + float(np.linalg.norm(p)))
        for j in range(p.size):
            e = np.zeros_like(p)
            e[j] = eps
            fd = (f.value(p + e) - f.value(p - e)) / (2.0 * eps)
            err = abs(fd - g[j]) / max(1.0, abs(g[j]))
            if not np.isfinite(err):
                err = np.inf
            if err > worst:
                worst, worst_j = err, j
    return GradCheckReport(float(worst), len(probes), worst_j, float(tol))
