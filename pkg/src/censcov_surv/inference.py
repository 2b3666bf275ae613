"""Wald intervals, p-values and delta-method propagation."""

import math
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import stats

from .models import CoefficientRow


def z_quantile(conf_level: float) -> float:
    return float(stats.norm.ppf(0.5 + 0.5 * conf_level))


def two_sided_p(estimate: float, std_error: float, null: float = 0.0) -> float:
    """Two-sided Wald p-value of H0: parameter == null."""
    if std_error == 0:
        return 1.0 if estimate == null else 0.0
    z = abs(estimate - null) / std_error
    return float(2.0 * stats.norm.sf(z))


def wald_row(
    name: str,
    estimate: float,
    std_error: Optional[float],
    conf_level: float = 0.95,
    null: Optional[float] = 0.0,
) -> CoefficientRow:
    """Coefficient row with estimate +/- z * SE; p-value only when null is given."""
    if std_error is None or not math.isfinite(estimate) or math.isnan(std_error):
        return CoefficientRow(name=name, estimate=estimate, std_error=std_error)
    half = z_quantile(conf_level) * std_error
    return CoefficientRow(
        name=name,
        estimate=estimate,
        std_error=std_error,
        ci_low=estimate - half,
        ci_high=estimate + half,
        p_value=None if null is None else two_sided_p(estimate, std_error, null),
    )


def exp_row(name: str, row: CoefficientRow) -> CoefficientRow:
    """exp of an estimate, interval bounds exponentiated (monotone transform)."""
    return CoefficientRow(
        name=name,
        estimate=math.exp(row.estimate),
        std_error=None,
        ci_low=None if row.ci_low is None else math.exp(row.ci_low),
        ci_high=None if row.ci_high is None else math.exp(row.ci_high),
        p_value=row.p_value,
    )


def delta_method(jacobian: ArrayLike, covariance: ArrayLike) -> NDArray[np.float64]:
    """First-order covariance J Sigma J' of a transformed estimate."""
    jac = np.atleast_2d(np.asarray(jacobian, dtype=float))
    cov = np.asarray(covariance, dtype=float)
    out = jac @ cov @ jac.T
    return np.asarray(0.5 * (out + out.T), dtype=float)


def std_errors(covariance: Optional[ArrayLike], size: int) -> list[Optional[float]]:
    """Square roots of the diagonal; all None when covariance is missing."""
    if covariance is None:
        return [None] * size
    diag = np.diag(np.asarray(covariance, dtype=float))
    return [float(math.sqrt(v)) if v >= 0 else None for v in diag]
