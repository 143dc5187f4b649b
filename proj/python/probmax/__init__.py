"""Python bindings for the probmax C++ core.

The heavy lifting happens in the compiled ``_ext`` module; this package only
re-exports it.
"""

from ._ext import (
    ConvexBody,
    DimensionError,
    FeasibleSet,
    ProbmaxRuntimeError,
    ProblemSpec,
    RandomStream,
    SolverSchedule,
    ValidationError,
    batch_gradient,
    batch_size,
    bench,
    budget_iterations,
    estimate_f,
    estimate_gradient_lipschitz,
    example1,
    example2,
    hit_or_miss,
    integrand,
    integrand_smooth,
    integrand_smooth_grad,
    next_lambda,
    problem_from_dict,
    run_experiment,
    run_solver,
    smooth_abs,
    smooth_abs_grad,
    smooth_max,
    smooth_max_grad,
)

__all__ = [name for name in dir() if not name.startswith("_")]
