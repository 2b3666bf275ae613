"""Weibull parametrizations and the covariate density families.

Three Weibull parametrizations are in use:

- PH:          S(z) = exp(-lambda * z^gamma)
- shape/scale: S(z) = exp(-(z / b)^a)            (gamma = a, lambda = b^-a)
- AFT:         log Z = mu + alpha'X + sigma * W   (gamma = 1/sigma,
               lambda = exp(-mu/sigma), beta = -alpha/sigma)

Covariate densities are backed by scipy.stats frozen distributions; the scalar
closures returned by `scalar_logpdf` are the hot path used inside quadrature.
"""

import math
from typing import Any, Callable, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import stats

from .errors import DomainError
from .models import (
    CovariateDensity,
    DensityFamily,
    WeibullAFT,
    WeibullPH,
    WeibullShapeScale,
)

FloatOrArray = Union[float, NDArray[np.float64]]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _positive_times(z: ArrayLike) -> NDArray[np.float64]:
    arr = np.asarray(z, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("Weibull functions are defined for z > 0 only")
    return arr


def _unwrap(arr: NDArray[np.float64]) -> FloatOrArray:
    return float(arr) if arr.ndim == 0 else arr


# ============================================================================
# WEIBULL
# ============================================================================


def weibull_logpdf_ph(z: ArrayLike, p: WeibullPH) -> FloatOrArray:
    """log f(z) = log lambda + log gamma + (gamma - 1) log z - lambda z^gamma."""
    arr = _positive_times(z)
    out = (
        math.log(p.lambda_)
        + math.log(p.gamma)
        + (p.gamma - 1.0) * np.log(arr)
        - p.lambda_ * arr**p.gamma
    )
    return _unwrap(np.asarray(out, dtype=float))


def weibull_pdf_ph(z: ArrayLike, p: WeibullPH) -> FloatOrArray:
    """Weibull density in the PH parametrization.

    Args:
        z: Time(s), strictly positive
        p: PH parameters

    Returns:
        lambda * gamma * z^(gamma - 1) * exp(-lambda * z^gamma)

    Raises:
        DomainError: If any z <= 0
    """
    return _unwrap(np.exp(np.asarray(weibull_logpdf_ph(z, p))))


def weibull_survival_ph(z: ArrayLike, p: WeibullPH) -> FloatOrArray:
    arr = _positive_times(z)
    return _unwrap(np.exp(-p.lambda_ * arr**p.gamma))


def weibull_hazard_ph(z: ArrayLike, p: WeibullPH) -> FloatOrArray:
    arr = _positive_times(z)
    return _unwrap(p.lambda_ * p.gamma * arr ** (p.gamma - 1.0))


def weibull_survival_shapescale(z: ArrayLike, p: WeibullShapeScale) -> FloatOrArray:
    arr = _positive_times(z)
    return _unwrap(np.exp(-((arr / p.b) ** p.a)))


def ph_to_shapescale(p: WeibullPH) -> WeibullShapeScale:
    """gamma = a and lambda = b^-a, so b = lambda^(-1/gamma)."""
    return WeibullShapeScale(a=p.gamma, b=p.lambda_ ** (-1.0 / p.gamma))


def shapescale_to_ph(p: WeibullShapeScale) -> WeibullPH:
    return WeibullPH(lambda_=p.b ** (-p.a), gamma=p.a)


def aft_to_ph(p: WeibullAFT) -> Tuple[WeibullPH, NDArray[np.float64]]:
    """Convert AFT parameters to the PH parametrization.

    Args:
        p: AFT parameters (mu, log sigma, alpha)

    Returns:
        Tuple of (WeibullPH, beta) with gamma = 1/sigma, lambda = exp(-mu/sigma)
        and beta = -alpha/sigma
    """
    sigma = p.sigma
    ph = WeibullPH(lambda_=math.exp(-p.mu / sigma), gamma=1.0 / sigma)
    beta = -np.asarray(p.alpha, dtype=float) / sigma
    return ph, beta


def ph_to_aft(p: WeibullPH, beta: ArrayLike = ()) -> WeibullAFT:
    """Inverse of aft_to_ph."""
    beta_arr = np.asarray(beta, dtype=float).reshape(-1)
    return WeibullAFT(
        mu=-math.log(p.lambda_) / p.gamma,
        log_sigma=-math.log(p.gamma),
        alpha=tuple(float(b) for b in -beta_arr / p.gamma),
    )


# ============================================================================
# COVARIATE DENSITIES
# ============================================================================


def frozen_distribution(d: CovariateDensity) -> Any:
    """scipy.stats frozen distribution for a covariate density."""
    first, second = d.params
    if d.family is DensityFamily.NORMAL:
        return stats.norm(loc=first, scale=second)
    if d.family is DensityFamily.LOGISTIC:
        return stats.logistic(loc=first, scale=second)
    if d.family is DensityFamily.GAMMA:
        return stats.gamma(a=first, scale=1.0 / second)
    return stats.weibull_min(c=first, scale=second)


def _check_support(d: CovariateDensity, x: NDArray[np.float64]) -> None:
    if d.positive_support and np.any(~(x > 0)):
        raise DomainError(f"{d.family.value} density is defined for x > 0 only")
    if np.any(np.isnan(x)):
        raise DomainError("density argument is NaN")


def density_eval(d: CovariateDensity, x: ArrayLike) -> FloatOrArray:
    """Evaluate f_theta(x).

    Raises:
        DomainError: If x lies outside the family's support
    """
    arr = np.asarray(x, dtype=float)
    _check_support(d, arr)
    return _unwrap(np.asarray(frozen_distribution(d).pdf(arr), dtype=float))


def cdf_eval(d: CovariateDensity, x: ArrayLike) -> FloatOrArray:
    """F_theta(x); 0 below a positive support."""
    arr = np.asarray(x, dtype=float)
    return _unwrap(np.asarray(frozen_distribution(d).cdf(arr), dtype=float))


def density_logpdf(d: CovariateDensity, x: ArrayLike) -> FloatOrArray:
    """log f_theta(x), -inf outside the support."""
    arr = np.asarray(x, dtype=float)
    return _unwrap(np.asarray(frozen_distribution(d).logpdf(arr), dtype=float))


def density_logcdf(d: CovariateDensity, x: ArrayLike) -> FloatOrArray:
    arr = np.asarray(x, dtype=float)
    return _unwrap(np.asarray(frozen_distribution(d).logcdf(arr), dtype=float))


def density_logsf(d: CovariateDensity, x: ArrayLike) -> FloatOrArray:
    arr = np.asarray(x, dtype=float)
    return _unwrap(np.asarray(frozen_distribution(d).logsf(arr), dtype=float))


def scalar_logpdf(d: CovariateDensity) -> Callable[[float], float]:
    """Scalar log-density closure for use inside quadrature loops.

    Agrees with density_logpdf to rounding; avoids the per-call overhead of
    scipy.stats on scalar arguments.
    """
    first, second = d.params

    if d.family is DensityFamily.NORMAL:
        mu, sigma = first, second
        log_norm = math.log(sigma) + _LOG_SQRT_2PI

        def normal(x: float) -> float:
            u = (x - mu) / sigma
            return -0.5 * u * u - log_norm

        return normal

    if d.family is DensityFamily.LOGISTIC:
        loc, scale = first, second
        log_scale = math.log(scale)

        def logistic(x: float) -> float:
            u = abs((x - loc) / scale)
            return -u - log_scale - 2.0 * math.log1p(math.exp(-u))

        return logistic

    if d.family is DensityFamily.GAMMA:
        shape, rate = first, second
        const = shape * math.log(rate) - math.lgamma(shape)

        def gamma(x: float) -> float:
            if x <= 0:
                return -math.inf
            return const + (shape - 1.0) * math.log(x) - rate * x

        return gamma

    shape, scale = first, second
    const = math.log(shape) - math.log(scale)

    def weibull(x: float) -> float:
        if x <= 0:
            return -math.inf
        u = x / scale
        return const + (shape - 1.0) * math.log(u) - u**shape

    return weibull
