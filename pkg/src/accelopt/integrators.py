"""Fixed-step explicit one-step methods for autonomous systems ``z' = F(z)``."""

import numpy as np


def euler_step(field, z: np.ndarray, h: float) -> np.ndarray:
    return z + h * field(z)


def rk4_step(field, z: np.ndarray, h: float) -> np.ndarray:
    k1 = field(z)
    k2 = field(z + 0.5 * h * k1)
    k3 = field(z + 0.5 * h * k2)
    k4 = field(z + h * k3)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


STEPPERS = {"euler": euler_step, "rk4": rk4_step}


def get_stepper(method: str):
    try:
        return STEPPERS[method]
    except KeyError:
        raise ValueError(f"unknown integration method {method!r}; choose from {sorted(STEPPERS)}") from None
