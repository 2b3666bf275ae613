"""Derivative-free maximization and Richardson-extrapolated Hessians.

Positive parameters are optimized on the log scale and reported back on the
natural scale. Objective values that are not finite (or raise a ValueError /
ArithmeticError, e.g. from an invalid parameter model) count as infeasible.
"""

import math
from typing import Callable, List, Literal, Optional, Sequence

import numpy as np
import structlog
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import minimize

from .errors import OptimizationError
from .models import HessianSettings, OptimizerSettings, OptimResult

logger = structlog.get_logger()

Transform = Literal["identity", "log"]
Objective = Callable[[NDArray[np.float64]], float]


def _safe_eval(f: Objective, x: NDArray[np.float64]) -> float:
    try:
        value = float(f(x))
    except (ValueError, ArithmeticError):
        return -math.inf
    return value if math.isfinite(value) else -math.inf


def _initial_simplex(u0: NDArray[np.float64]) -> NDArray[np.float64]:
    steps = np.where(np.abs(u0) < 1.0, 0.1, 0.1 * np.abs(u0))
    simplex = np.tile(u0, (u0.size + 1, 1))
    simplex[1:] += np.diag(steps)
    return simplex


def maximize(
    f: Objective,
    x0: ArrayLike,
    transforms: Optional[Sequence[Transform]] = None,
    settings: Optional[OptimizerSettings] = None,
) -> OptimResult:
    """Maximize f with Nelder-Mead on transformed coordinates.

    Args:
        f: Objective on the natural scale
        x0: Starting point on the natural scale
        transforms: Per coordinate "identity" or "log" (log keeps it positive)
        settings: Iteration limits and tolerances

    Returns:
        OptimResult with the argmax on the natural scale

    Raises:
        OptimizationError: If f is not finite at x0; the message names the
            coordinates along which the starting simplex is also infeasible
    """
    settings = settings or OptimizerSettings()
    x0_arr = np.asarray(x0, dtype=float).reshape(-1)
    kinds: List[Transform] = list(transforms or ["identity"] * x0_arr.size)
    if len(kinds) != x0_arr.size:
        raise ValueError("one transform per coordinate is required")
    is_log = np.array([k == "log" for k in kinds])
    if np.any(x0_arr[is_log] <= 0):
        raise OptimizationError("log-transformed coordinates must start positive")

    def to_natural(u: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.where(is_log, np.exp(u), u)

    evaluations = 0

    def objective(u: NDArray[np.float64]) -> float:
        nonlocal evaluations
        evaluations += 1
        value = _safe_eval(f, to_natural(u))
        return -value if math.isfinite(value) else math.inf

    u0 = np.where(is_log, np.log(np.where(is_log, x0_arr, 1.0)), x0_arr)
    simplex = _initial_simplex(u0)
    f0 = objective(u0)
    if not math.isfinite(f0):
        bad = [i for i in range(u0.size) if not math.isfinite(objective(simplex[i + 1]))]
        raise OptimizationError(
            "objective is not finite at the starting point; "
            f"infeasible along coordinates {bad}"
        )

    fatol = settings.fatol_rel * (1.0 + abs(f0))
    options = {
        "maxiter": settings.max_iterations,
        "maxfev": 4 * settings.max_iterations,
        "xatol": settings.xatol,
        "fatol": fatol,
        "adaptive": True,
    }
    result = minimize(
        objective, u0, method="Nelder-Mead", options={**options, "initial_simplex": simplex}
    )
    iterations = int(result.nit)
    if settings.restart:
        restart = minimize(
            objective,
            result.x,
            method="Nelder-Mead",
            options={**options, "initial_simplex": _initial_simplex(result.x)},
        )
        iterations += int(restart.nit)
        if restart.fun <= result.fun:
            result = restart

    value = -float(result.fun)
    converged = bool(result.success) and math.isfinite(value)
    if not converged:
        logger.warning(
            "optimizer_not_converged", message=str(result.message), iterations=iterations
        )
    return OptimResult(
        argmax=tuple(float(v) for v in to_natural(result.x)),
        value=value,
        converged=converged,
        iterations=iterations,
        function_evals=evaluations,
        message=str(result.message),
    )


def _second_differences(
    f: Objective, x: NDArray[np.float64], h: NDArray[np.float64], fx: float
) -> NDArray[np.float64]:
    p = x.size
    out = np.empty((p, p))
    eye = np.eye(p)
    for i in range(p):
        ei = eye[i] * h[i]
        out[i, i] = (_raw_eval(f, x + ei) - 2.0 * fx + _raw_eval(f, x - ei)) / h[i] ** 2
        for j in range(i):
            ej = eye[j] * h[j]
            value = (
                _raw_eval(f, x + ei + ej)
                - _raw_eval(f, x + ei - ej)
                - _raw_eval(f, x - ei + ej)
                + _raw_eval(f, x - ei - ej)
            ) / (4.0 * h[i] * h[j])
            out[i, j] = out[j, i] = value
    return out


def _raw_eval(f: Objective, x: NDArray[np.float64]) -> float:
    try:
        return float(f(x))
    except (ValueError, ArithmeticError):
        return math.nan


def hessian(
    f: Objective, x: ArrayLike, s: Optional[HessianSettings] = None
) -> NDArray[np.float64]:
    """Numerical Hessian of f at x.

    Central second differences at steps h, h/2, h/4, ... with h relative to
    max(|x_i|, 1), combined by Richardson extrapolation and symmetrized.
    Failed evaluations propagate as NaN.
    """
    s = s or HessianSettings()
    x_arr = np.asarray(x, dtype=float).reshape(-1)
    fx = _raw_eval(f, x_arr)
    h0 = s.initial_step * np.maximum(np.abs(x_arr), 1.0)
    table = [
        _second_differences(f, x_arr, h0 / 2.0**k, fx) for k in range(s.richardson_steps)
    ]
    for m in range(1, s.richardson_steps):
        factor = 4.0**m
        table = [
            (factor * table[k + 1] - table[k]) / (factor - 1.0) for k in range(len(table) - 1)
        ]
    result = table[0]
    return np.asarray(0.5 * (result + result.T), dtype=float)


def numerical_gradient(
    f: Objective, x: ArrayLike, step: float = 1e-5
) -> NDArray[np.float64]:
    """Central-difference gradient with steps relative to max(|x_i|, 1)."""
    x_arr = np.asarray(x, dtype=float).reshape(-1)
    h = step * np.maximum(np.abs(x_arr), 1.0)
    grad = np.empty_like(x_arr)
    for i in range(x_arr.size):
        e = np.zeros_like(x_arr)
        e[i] = h[i]
        grad[i] = (_raw_eval(f, x_arr + e) - _raw_eval(f, x_arr - e)) / (2.0 * h[i])
    return grad


def covariance_from_hessian(h: ArrayLike) -> Optional[NDArray[np.float64]]:
    """Inverse of the observed information -H, or None if it is not positive definite."""
    info = -np.asarray(h, dtype=float)
    if info.size == 0:
        return np.zeros((0, 0))
    if not np.all(np.isfinite(info)):
        return None
    try:
        factor = cho_factor(info)
    except LinAlgError:
        return None
    cov = cho_solve(factor, np.eye(info.shape[0]))
    return np.asarray(0.5 * (cov + cov.T), dtype=float)
