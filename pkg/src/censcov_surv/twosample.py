"""Mean difference of two independent censored Normal samples with unequal variances."""

import math
from typing import Optional, Sequence

import structlog

from .inference import wald_row
from .models import (
    CensoredValue,
    CoefficientRow,
    DensityFamily,
    HessianSettings,
    MeanDiffFit,
    OptimizerSettings,
)
from .onesample import fit_censored_sample

logger = structlog.get_logger()


def _renamed(row: CoefficientRow, name: str) -> CoefficientRow:
    return row.model_copy(update={"name": name})


def normal_mean_diff(
    sample1: Sequence[CensoredValue],
    sample2: Sequence[CensoredValue],
    conf_level: float = 0.95,
    optimizer: Optional[OptimizerSettings] = None,
    hessian_settings: Optional[HessianSettings] = None,
) -> MeanDiffFit:
    """Estimate delta = mu1 - mu2 from two interval-censored Normal samples.

    Each sample is fitted on its own; by independence
    SE(delta) = sqrt(SE(mu1)^2 + SE(mu2)^2).
    """
    fit1 = fit_censored_sample(
        sample1, DensityFamily.NORMAL, conf_level, optimizer, hessian_settings
    )
    fit2 = fit_censored_sample(
        sample2, DensityFamily.NORMAL, conf_level, optimizer, hessian_settings
    )
    mu1, sigma1 = fit1.coefficients
    mu2, sigma2 = fit2.coefficients

    se: Optional[float] = None
    if mu1.std_error is not None and mu2.std_error is not None:
        se = math.sqrt(mu1.std_error**2 + mu2.std_error**2)
    delta = wald_row("delta", mu1.estimate - mu2.estimate, se, conf_level, null=0.0)
    logger.info("mean_difference_complete", delta=delta.estimate, std_error=se)

    return MeanDiffFit(
        mu1=_renamed(mu1, "mu1"),
        mu2=_renamed(mu2, "mu2"),
        sigma1=_renamed(sigma1, "sigma1"),
        sigma2=_renamed(sigma2, "sigma2"),
        delta=delta,
        conf_level=conf_level,
    )
