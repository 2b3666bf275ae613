"""Maximum-likelihood estimation of a parametric family from one censored sample."""

import math
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import structlog

from .censlik import CensoredSample
from .errors import DomainError, NonIdentifiableError
from .inference import std_errors, wald_row
from .models import (
    FAMILY_PARAMETERS,
    CensoredValue,
    CovariateDensity,
    DensityFamily,
    HessianSettings,
    OneSampleFit,
    OptimizerSettings,
)
from .optimize import Transform, covariance_from_hessian, hessian, maximize

logger = structlog.get_logger()

_EULER_GAMMA = 0.5772156649015329

_TRANSFORMS: Dict[DensityFamily, Tuple[Transform, Transform]] = {
    DensityFamily.NORMAL: ("identity", "log"),
    DensityFamily.LOGISTIC: ("identity", "log"),
    DensityFamily.GAMMA: ("log", "log"),
    DensityFamily.WEIBULL: ("log", "log"),
}

# Wald null values: location parameters against 0, scale/shape/rate against 1
_NULLS: Dict[DensityFamily, Tuple[float, float]] = {
    DensityFamily.NORMAL: (0.0, 1.0),
    DensityFamily.LOGISTIC: (0.0, 1.0),
    DensityFamily.GAMMA: (1.0, 1.0),
    DensityFamily.WEIBULL: (1.0, 1.0),
}


def _initial_values(sample: CensoredSample, family: DensityFamily) -> Tuple[float, float]:
    """Moment estimates with censored values replaced by their finite bound."""
    x = sample.finite_bounds()
    if family in (DensityFamily.GAMMA, DensityFamily.WEIBULL):
        x = x[x > 0]
    mean = float(np.mean(x))
    sd = float(np.std(x))
    if not sd > 0:
        sd = max(abs(mean) * 0.1, 1.0)

    if family is DensityFamily.NORMAL:
        return mean, sd
    if family is DensityFamily.LOGISTIC:
        return mean, sd * math.sqrt(3.0) / math.pi
    if family is DensityFamily.GAMMA:
        var = sd * sd
        return mean * mean / var, mean / var
    logs = np.log(x)
    log_sd = float(np.std(logs)) or 1.0
    shape = math.pi / (math.sqrt(6.0) * log_sd)
    return shape, math.exp(float(np.mean(logs)) + _EULER_GAMMA / shape)


def _check_sample(sample: CensoredSample, family: DensityFamily) -> None:
    if sample.n < 3:
        raise NonIdentifiableError(f"at least 3 observations are required, got {sample.n}")
    if sample.n_exact + sample.n_interval < 2:
        raise NonIdentifiableError(
            "at least 2 exact or interval-censored observations are required; "
            "the sample carries no information about the scale"
        )
    if family in (DensityFamily.GAMMA, DensityFamily.WEIBULL) and np.any(sample.exact <= 0):
        raise DomainError(f"{family.value} samples must be positive")


def fit_censored_sample(
    data: Sequence[CensoredValue],
    family: DensityFamily = DensityFamily.NORMAL,
    conf_level: float = 0.95,
    optimizer: Optional[OptimizerSettings] = None,
    hessian_settings: Optional[HessianSettings] = None,
) -> OneSampleFit:
    """Fit a Normal, Logistic, Gamma or Weibull family to one censored sample.

    Standard errors come from the observed Fisher information on the natural
    scale. Location parameters are tested against 0, scale, shape and rate
    against 1.

    Args:
        data: Possibly censored observations
        family: Distribution family
        conf_level: Level of the Wald intervals
        optimizer: Nelder-Mead settings
        hessian_settings: Numerical Hessian settings

    Returns:
        OneSampleFit with two coefficient rows named after the family's parameters

    Raises:
        NonIdentifiableError: Fewer than 3 observations, or fewer than 2 exact
            or interval-censored ones
        OptimizationError: If the likelihood is not finite at the start
    """
    sample = CensoredSample(data)
    _check_sample(sample, family)
    log = logger.bind(component="onesample", family=family.value)

    def objective(theta: np.ndarray) -> float:
        return sample.loglik(CovariateDensity(family=family, params=(theta[0], theta[1])))

    start = _initial_values(sample, family)
    log.debug("fitting_censored_sample", n=sample.n, start=start)
    result = maximize(objective, start, _TRANSFORMS[family], optimizer)

    cov = covariance_from_hessian(hessian(objective, result.argmax, hessian_settings))
    if cov is None:
        log.warning("covariance_unavailable", argmax=result.argmax)
    ses = std_errors(cov, 2)
    names = FAMILY_PARAMETERS[family]
    rows = [
        wald_row(name, est, se, conf_level, null)
        for name, est, se, null in zip(names, result.argmax, ses, _NULLS[family])
    ]
    log.info("censored_sample_fit_complete", loglik=result.value, converged=result.converged)
    return OneSampleFit(
        family=family,
        coefficients=rows,
        loglik=result.value,
        n_exact=sample.n_exact,
        n_left=sample.n_left,
        n_right=sample.n_right,
        n_interval=sample.n_interval,
        converged=result.converged,
        covariance_available=cov is not None,
        covariance=None if cov is None else cov.tolist(),
        conf_level=conf_level,
    )


def density_from_fit(fit: OneSampleFit) -> CovariateDensity:
    """Fixed covariate density at the fitted parameters (first stage of a two-stage fit)."""
    first, second = fit.estimates
    return CovariateDensity(family=fit.family, params=(first, second))
