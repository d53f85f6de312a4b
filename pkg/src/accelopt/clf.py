"""Quadratic control Lyapunov function and the singular feedback law.

The controlled pair is ``(lambda_x, v)`` with dynamics
``d lambda_x/dt = -H(x) v`` and ``dv/dt = u``. The CLF is

    V = (a/2) |lambda_x|^2 + (b/2) |v|^2 + c lambda_x . v

and the feedback is ``u = K_a lambda_x + K_b v + K_c H(x) v``. Here
``lambda_x`` is the cost-multiplier-normalised costate, so on the singular
arc it equals ``-grad E(x)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .objective import Objective


class ClfParamsError(ValueError):
    """Raised when (a, b, c) do not define a positive definite CLF."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid CLF parameters: " + "; ".join(self.violations))


def clf_violations(a: float, b: float, c: float) -> list[str]:
    """Every violated constraint among a > 0, b > 0, c < 0, ab - c^2 > 0."""
    out = []
    if not a > 0:
        out.append(f"a > 0 violated (a = {a!r})")
    if not b > 0:
        out.append(f"b > 0 violated (b = {b!r})")
    if not c < 0:
        out.append(f"c < 0 violated (c = {c!r})")
    det = a * b - c * c
    if not det > 0:
        out.append(f"ab - c^2 > 0 violated (ab - c^2 = {det!r})")
    return out


@dataclass(frozen=True)
class ClfParams:
    a: float
    b: float
    c: float

    def __post_init__(self):
        bad = clf_violations(self.a, self.b, self.c)
        if bad:
            raise ClfParamsError(bad)


def validate_clf_params(a: float, b: float, c: float) -> ClfParams:
    """Return validated parameters; raise :class:`ClfParamsError` listing all violations."""
    return ClfParams(float(a), float(b), float(c))


@dataclass(frozen=True)
class Gains:
    """Feedback gains tied to the CLF that generated them.

    The damping coefficients of the closed-loop ODE are the sign-flipped
    gains: ``gamma_a = K_a``, ``gamma_b = -K_b``, ``gamma_c = -K_c``.
    """

    K_a: float
    K_b: float
    K_c: float
    clf: ClfParams

    def __post_init__(self):
        if not self.K_a > 0:
            raise ValueError(f"K_a must be positive, got {self.K_a}")
        if not self.K_b < 0:
            raise ValueError(f"K_b must be negative, got {self.K_b}")
        a, b, c = self.clf.a, self.clf.b, self.clf.c
        if not np.isclose(b * self.K_a, c * self.K_b, rtol=1e-12, atol=0.0):
            raise ValueError("gains violate b*K_a == c*K_b")
        if not np.isclose(self.K_c, a / c, rtol=1e-12, atol=0.0):
            raise ValueError("gains violate K_c == a/c")

    @property
    def gamma_a(self) -> float:
        return self.K_a

    @property
    def gamma_b(self) -> float:
        return -self.K_b

    @property
    def gamma_c(self) -> float:
        return -self.K_c

    @property
    def gammas(self) -> tuple[float, float, float]:
        return self.gamma_a, self.gamma_b, self.gamma_c


def derive_gains(clf: ClfParams, K_a: float = 1.0) -> Gains:
    """Solve ``b K_a = c K_b`` and ``K_c = a / c`` for a chosen scale ``K_a > 0``.

    >>> g = derive_gains(ClfParams(2.0, 2.0, -1.0))
    >>> g.gammas
    (1.0, 2.0, 2.0)
    """
    K_a = float(K_a)
    if not K_a > 0:
        raise ValueError(f"K_a must be positive, got {K_a}")
    return Gains(K_a, clf.b * K_a / clf.c, clf.a / clf.c, clf)


def _vectors(*arrays):
    out = [np.asarray(a, dtype=float) for a in arrays]
    shape = out[0].shape
    for a in out[1:]:
        if a.shape != shape:
            raise ValueError(f"dimension mismatch: {shape} vs {a.shape}")
    return out


def lyapunov_value(clf: ClfParams, lambda_x, v) -> float:
    lam, v = _vectors(lambda_x, v)
    return float(0.5 * clf.a * lam @ lam + 0.5 * clf.b * v @ v + clf.c * lam @ v)


def control(gains: Gains, f: Objective, x, lambda_x, v, hv=None) -> np.ndarray:
    """Feedback ``u = K_a lambda_x + K_b v + K_c H(x) v``.

    ``hv`` may carry a precomputed ``H(x) v`` to avoid a second product.
    """
    x, lam, v = _vectors(x, lambda_x, v)
    if hv is None:
        hv = f.hvp(x, v)
    return gains.K_a * lam + gains.K_b * v + gains.K_c * hv


def lie_derivative(clf: ClfParams, gains: Gains, f: Objective, x, lambda_x, v) -> float:
    """Derivative of V along ``(-H v, u)`` with ``u`` from :func:`control`."""
    x, lam, v = _vectors(x, lambda_x, v)
    hv = f.hvp(x, v)
    u = control(gains, f, x, lam, v, hv=hv)
    return float(-(clf.a * lam + clf.c * v) @ hv + (clf.c * lam + clf.b * v) @ u)


def lie_derivative_terms(
    clf: ClfParams, gains: Gains, f: Objective, x, lambda_x, v
) -> tuple[float, float, float]:
    """The Lie derivative split into its three addends after substituting u.

    Returns ``(cross, curvature, feedback)`` where

    * ``cross = (-a + c K_c) lambda_x . Hv``, zero when ``K_c = a/c``;
    * ``curvature = (-c + b K_c) v . Hv``, equal to ``((ab - c^2)/c) v.Hv``;
    * ``feedback = (c lambda_x + b v) . (K_a lambda_x + K_b v)``, equal to
      ``(K_b / b) |c lambda_x + b v|^2`` when ``b K_a = c K_b``.
    """
    x, lam, v = _vectors(x, lambda_x, v)
    a, b, c = clf.a, clf.b, clf.c
    hv = f.hvp(x, v)
    cross = (-a + c * gains.K_c) * float(lam @ hv)
    curvature = (-c + b * gains.K_c) * float(v @ hv)
    feedback = float((c * lam + b * v) @ (gains.K_a * lam + gains.K_b * v))
    return cross, curvature, feedback



def default_gains() -> Gains:
    """Gains for (a, b, c) = (2, 2, -1) and K_a = 1, i.e. gamma = (1, 2, 2)."""
    return derive_gains(ClfParams(2.0, 2.0, -1.0), 1.0)
