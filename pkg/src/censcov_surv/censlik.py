"""Log-likelihood contributions of arbitrarily censored observations.

An exact value contributes log f(x), a left-censored one log F(high), a
right-censored one log(1 - F(low)) and an interval log(F(high) - F(low)).
A region with zero probability mass contributes -inf rather than raising, so
optimizers can treat the parameter point as infeasible.
"""

import math
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from .distributions import (
    density_logcdf,
    density_logpdf,
    density_logsf,
    frozen_distribution,
)
from .errors import CensoringParseError
from .models import CensKind, CensoredValue, CovariateDensity


MISSING_TOKENS = frozenset({"NA", ""})


def _log_interval_mass(dist: Any, low: np.ndarray, high: np.ndarray) -> np.ndarray:
    # differences of survival functions keep precision in the upper tail
    upper = low > dist.median()
    mass = np.where(upper, dist.sf(low) - dist.sf(high), dist.cdf(high) - dist.cdf(low))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(mass > 0, np.log(np.where(mass > 0, mass, 1.0)), -np.inf)
    return np.asarray(out, dtype=float)


def loglik_contribution(v: CensoredValue, d: CovariateDensity) -> float:
    """Log-likelihood term of one censored value under density d.

    Args:
        v: The observation
        d: Covariate density f_theta

    Returns:
        The log-likelihood term; -inf when the censoring region has no mass
    """
    kind = v.kind
    if kind is CensKind.EXACT:
        value = float(density_logpdf(d, v.low))  # type: ignore[arg-type]
    elif kind is CensKind.LEFT:
        value = float(density_logcdf(d, v.high))  # type: ignore[arg-type]
    elif kind is CensKind.RIGHT:
        value = float(density_logsf(d, v.low))  # type: ignore[arg-type]
    else:
        value = float(
            _log_interval_mass(
                frozen_distribution(d), np.asarray(v.low), np.asarray(v.high)
            )
        )
    if math.isnan(value):
        return -math.inf
    return value


class CensoredSample:
    """Array view of a list of CensoredValue, grouped by censoring kind."""

    def __init__(self, values: Iterable[CensoredValue]):
        exact, left, right, int_low, int_high = [], [], [], [], []
        for v in values:
            kind = v.kind
            if kind is CensKind.EXACT:
                exact.append(v.low)
            elif kind is CensKind.LEFT:
                left.append(v.high)
            elif kind is CensKind.RIGHT:
                right.append(v.low)
            else:
                int_low.append(v.low)
                int_high.append(v.high)
        self.exact = np.asarray(exact, dtype=float)
        self.left = np.asarray(left, dtype=float)
        self.right = np.asarray(right, dtype=float)
        self.interval_low = np.asarray(int_low, dtype=float)
        self.interval_high = np.asarray(int_high, dtype=float)

    @property
    def n_exact(self) -> int:
        return int(self.exact.size)

    @property
    def n_left(self) -> int:
        return int(self.left.size)

    @property
    def n_right(self) -> int:
        return int(self.right.size)

    @property
    def n_interval(self) -> int:
        return int(self.interval_low.size)

    @property
    def n(self) -> int:
        return self.n_exact + self.n_left + self.n_right + self.n_interval

    def finite_bounds(self) -> np.ndarray:
        """Values with censored entries replaced by their finite bound."""
        return np.concatenate(
            [
                self.exact,
                self.left,
                self.right,
                0.5 * (self.interval_low + self.interval_high),
            ]
        )

    def loglik(self, d: CovariateDensity) -> float:
        """Sum of loglik_contribution over the sample, vectorized."""
        dist = frozen_distribution(d)
        with np.errstate(divide="ignore", invalid="ignore"):
            total = 0.0
            if self.exact.size:
                total += float(np.sum(dist.logpdf(self.exact)))
            if self.left.size:
                total += float(np.sum(dist.logcdf(self.left)))
            if self.right.size:
                total += float(np.sum(dist.logsf(self.right)))
            if self.interval_low.size:
                total += float(
                    np.sum(_log_interval_mass(dist, self.interval_low, self.interval_high))
                )
        if math.isnan(total):
            return -math.inf
        return total


def censored_loglik(values: Sequence[CensoredValue], d: CovariateDensity) -> float:
    return CensoredSample(values).loglik(d)


def _parse_token(text: str, which: str, row: Optional[int]) -> Optional[float]:
    token = text.strip()
    if token in MISSING_TOKENS:
        return None
    try:
        value = float(token)
    except ValueError as e:
        raise CensoringParseError(f"{which} bound {text!r} is not a number", row) from e
    if not math.isfinite(value):
        raise CensoringParseError(f"{which} bound {text!r} is not finite", row)
    return value


def parse_interval2(
    low_text: str, high_text: str, row: Optional[int] = None
) -> CensoredValue:
    """Decode an interval2 pair of tokens.

    (x, x) is exact, (NA, u) left-censored at u, (l, NA) right-censored at l and
    (l, u) with l < u interval-censored. The missing marker is the literal `NA`
    or an empty field.

    Args:
        low_text: Lower-bound token
        high_text: Upper-bound token
        row: Row number for error messages

    Returns:
        The decoded CensoredValue

    Raises:
        CensoringParseError: For (NA, NA), l > u, or non-numeric tokens
    """
    low = _parse_token(low_text, "lower", row)
    high = _parse_token(high_text, "upper", row)
    if low is None and high is None:
        raise CensoringParseError("both bounds missing", row)
    if low is not None and high is not None and low > high:
        raise CensoringParseError(f"lower bound {low} exceeds upper bound {high}", row)
    return CensoredValue(low=low, high=high)
