"""Adaptive quadrature over the region encoded by a CensoredValue.

QUADPACK (via scipy.integrate.quad) does the work: Gauss-Kronrod rules with
bisection, and the x = h - (1 - t)/t map for semi-infinite ranges. Integrand
values below `trunc_eps` are set to 0 before accumulation, which keeps
far-tail underflow noise out of the error estimate without needing a cut-off
for the integration range.
"""

import math
from typing import Callable, NamedTuple, Tuple

import structlog
from scipy.integrate import quad

from .models import CensKind, CensoredValue, IntegrationSettings

logger = structlog.get_logger()

DEFAULT_SETTINGS = IntegrationSettings()


class QuadratureResult(NamedTuple):
    """Integral estimate; `converged` is False when QUADPACK gave up."""

    value: float
    error: float
    converged: bool
    evaluations: int


def region_bounds(v: CensoredValue) -> Tuple[float, float]:
    """Integration limits of a censored value (left: (-inf, high], etc.)."""
    kind = v.kind
    if kind is CensKind.EXACT:
        raise ValueError("an exact value has no integration region")
    low = -math.inf if v.low is None else v.low
    high = math.inf if v.high is None else v.high
    return low, high


def integrate_censored_region(
    g: Callable[[float], float],
    v: CensoredValue,
    s: IntegrationSettings = DEFAULT_SETTINGS,
) -> QuadratureResult:
    """Integrate g over the censoring region of v.

    Args:
        g: Integrand, finite on the interior of the region
        v: Left-, right- or interval-censored value
        s: Tolerances, truncation threshold and subdivision limit

    Returns:
        QuadratureResult with the best estimate; converged=False carries the
        estimate and error bound reached before the subdivision limit

    Raises:
        ValueError: If v is exact
    """
    low, high = region_bounds(v)
    eps = s.trunc_eps

    def truncated(x: float) -> float:
        y = g(x)
        return y if y >= eps else 0.0

    out = quad(
        truncated,
        low,
        high,
        epsabs=s.abs_tol,
        epsrel=s.rel_tol,
        limit=s.max_subdivisions,
        full_output=1,
    )
    value, error, info = out[0], out[1], out[2]
    # a fourth element is the QUADPACK diagnostic, present only on trouble
    converged = len(out) == 3
    if not converged:
        logger.debug(
            "integration_not_converged",
            low=low,
            high=high,
            value=value,
            error=error,
            message=str(out[3]).splitlines()[0] if out[3] else "",
        )
    return QuadratureResult(float(value), float(error), converged, int(info["neval"]))
