"""Accelerated gradient methods from a control Lyapunov design on the double integrator."""

from .clf import (
    ClfParams,
    ClfParamsError,
    Gains,
    clf_violations,
    control,
    default_gains,
    derive_gains,
    lie_derivative,
    lie_derivative_terms,
    lyapunov_value,
    validate_clf_params,
)
from .discrete import (
    IterateState,
    Schedule,
    check_equivalence,
    derived_step,
    gradient_descent_step,
    heavy_ball_step,
    nesterov_single_sequence_step,
    nesterov_step,
    ode_matched_coefficients,
    run,
)
from .dual import FullState, ResidualReport, integrate_full, primal_dual_field, terminal_check
from .objective import (
    GradCheckReport,
    Objective,
    check_gradient,
    hvp_finite_difference,
    make_log_sum_exp,
    make_quadratic,
    make_rosenbrock,
)
from .ode import OdeOptions, PrimalState, closed_loop_field, integrate, order_check
from .trace import DivergenceError, Trace, TraceRecord

__version__ = "0.1.0"
