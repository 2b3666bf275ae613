"""Unit tests for censored log-likelihood terms and interval2 parsing."""

import math

import numpy as np
import pytest
from scipy import stats

from censcov_surv.censlik import (
    CensoredSample,
    censored_loglik,
    loglik_contribution,
    parse_interval2,
)
from censcov_surv.errors import CensoringParseError
from censcov_surv.models import (
    CensKind,
    CensoredValue,
    CensStatus,
    CovariateDensity,
    DensityFamily,
)

STD_NORMAL = CovariateDensity(family=DensityFamily.NORMAL, params=(0.0, 1.0))


class TestCensoredValue:
    """Test CensoredValue construction and classification."""

    def test_kinds(self):
        """Test each bound pattern maps to its kind."""
        assert CensoredValue.exact(1.0).kind is CensKind.EXACT
        assert CensoredValue.left(1.0).kind is CensKind.LEFT
        assert CensoredValue.right(1.0).kind is CensKind.RIGHT
        assert CensoredValue.interval(0.0, 1.0).kind is CensKind.INTERVAL

    def test_status_is_observed_only_for_exact(self):
        """Test the censoring status indicator."""
        assert CensoredValue.exact(2.0).status is CensStatus.OBSERVED
        assert CensoredValue.left(2.0).status is CensStatus.CENSORED
        assert CensoredValue.interval(1.0, 2.0).status is CensStatus.CENSORED

    def test_both_bounds_missing_rejected(self):
        """Test a value without bounds is invalid."""
        with pytest.raises(ValueError):
            CensoredValue(low=None, high=None)

    def test_reversed_bounds_rejected(self):
        """Test low > high is invalid."""
        with pytest.raises(ValueError):
            CensoredValue(low=2.0, high=1.0)

    def test_finite_bound(self):
        """Test the imputation value of each kind."""
        assert CensoredValue.left(-3.9673).finite_bound == -3.9673
        assert CensoredValue.right(2.0).finite_bound == 2.0
        assert CensoredValue.interval(1.0, 2.0).finite_bound == 1.5


class TestLoglikContribution:
    """Test the log-likelihood term of each censoring kind."""

    def test_exact(self):
        """Test exact x=0 under Normal(0,1)."""
        value = loglik_contribution(CensoredValue.exact(0.0), STD_NORMAL)
        assert value == pytest.approx(math.log(0.3989423), abs=1e-7)

    @pytest.mark.parametrize(
        "family,params",
        [
            (DensityFamily.NORMAL, (-2.467, 1.712)),
            (DensityFamily.LOGISTIC, (1.0, 2.0)),
            (DensityFamily.GAMMA, (2.0, 0.5)),
            (DensityFamily.WEIBULL, (1.5, 3.0)),
        ],
    )
    def test_left_censored_at_median(self, family, params):
        """Test left-censoring at the median contributes log 0.5."""
        from censcov_surv.distributions import frozen_distribution

        d = CovariateDensity(family=family, params=params)
        median = float(frozen_distribution(d).median())
        value = loglik_contribution(CensoredValue.left(median), d)
        assert value == pytest.approx(math.log(0.5), abs=1e-10)

    def test_interval(self):
        """Test [-1, 1] under Normal(0,1)."""
        value = loglik_contribution(CensoredValue.interval(-1.0, 1.0), STD_NORMAL)
        assert value == pytest.approx(math.log(0.6826895), abs=1e-7)

    def test_right(self):
        """Test right-censoring at 0 under Normal(0,1)."""
        value = loglik_contribution(CensoredValue.right(0.0), STD_NORMAL)
        assert value == pytest.approx(math.log(0.5), abs=1e-14)

    def test_partition_additivity(self):
        """Test interval masses add up over adjacent intervals."""
        d = CovariateDensity(family=DensityFamily.NORMAL, params=(-2.467, 1.712))
        grid = [(-6.0, -3.0, 1.0), (-2.0, -1.9, -1.8), (0.5, 2.0, 8.0)]
        for a, b, c in grid:
            left = math.exp(loglik_contribution(CensoredValue.interval(a, b), d))
            right = math.exp(loglik_contribution(CensoredValue.interval(b, c), d))
            whole = math.exp(loglik_contribution(CensoredValue.interval(a, c), d))
            assert left + right == pytest.approx(whole, abs=1e-10)

    def test_left_censored_far_in_upper_tail(self):
        """Test the left-censored term tends to log 1 = 0."""
        value = loglik_contribution(CensoredValue.left(40.0), STD_NORMAL)
        assert value == pytest.approx(0.0, abs=1e-15)

    def test_zero_mass_region_is_minus_inf(self):
        """Test a region without mass gives -inf instead of raising."""
        d = CovariateDensity(family=DensityFamily.GAMMA, params=(2.0, 1.0))
        assert loglik_contribution(CensoredValue.left(-1.0), d) == -math.inf
        assert loglik_contribution(CensoredValue.interval(-2.0, -1.0), d) == -math.inf

    def test_upper_tail_interval_keeps_precision(self):
        """Test an interval far in the upper tail matches the survival-function difference."""
        value = loglik_contribution(CensoredValue.interval(9.0, 10.0), STD_NORMAL)
        expected = math.log(stats.norm.sf(9.0) - stats.norm.sf(10.0))
        assert value == pytest.approx(expected, rel=1e-10)


class TestCensoredSample:
    """Test the vectorized sample log-likelihood."""

    def test_matches_sum_of_contributions(self):
        """Test the vectorized sum equals the per-value sum."""
        d = CovariateDensity(family=DensityFamily.NORMAL, params=(-2.0, 1.5))
        values = [
            CensoredValue.exact(-1.0),
            CensoredValue.exact(-2.5),
            CensoredValue.left(-3.0),
            CensoredValue.right(0.0),
            CensoredValue.interval(-4.0, -2.0),
        ]
        expected = sum(loglik_contribution(v, d) for v in values)
        assert censored_loglik(values, d) == pytest.approx(expected, rel=1e-12)

    def test_counts(self):
        """Test values are grouped by kind."""
        sample = CensoredSample(
            [CensoredValue.exact(1.0), CensoredValue.left(0.0), CensoredValue.left(0.5)]
        )
        assert (sample.n_exact, sample.n_left, sample.n_right, sample.n_interval) == (1, 2, 0, 0)
        assert sample.n == 3
        np.testing.assert_array_equal(sample.finite_bounds(), [1.0, 0.0, 0.5])


class TestParseInterval2:
    """Test decoding of interval2 token pairs."""

    def test_exact(self):
        """Test equal bounds decode to an exact value."""
        v = parse_interval2("-1.5124", "-1.5124")
        assert v.kind is CensKind.EXACT
        assert v.low == -1.5124

    def test_left(self):
        """Test a missing lower bound decodes to left-censoring."""
        v = parse_interval2("NA", "-3.9673")
        assert v.kind is CensKind.LEFT
        assert v.high == -3.9673

    def test_empty_token_is_missing(self):
        """Test an empty field is a missing marker."""
        assert parse_interval2("2.5", "").kind is CensKind.RIGHT

    def test_interval(self):
        """Test two ordered bounds decode to an interval."""
        assert parse_interval2("1", "2").kind is CensKind.INTERVAL

    def test_both_missing(self):
        """Test (NA, NA) is rejected."""
        with pytest.raises(CensoringParseError):
            parse_interval2("NA", "NA")

    def test_reversed(self):
        """Test l > u is rejected with the row number."""
        with pytest.raises(CensoringParseError, match="row 7"):
            parse_interval2("2", "1", row=7)

    def test_non_numeric(self):
        """Test non-numeric tokens are rejected."""
        with pytest.raises(CensoringParseError):
            parse_interval2("abc", "1")

    def test_missing_marker_is_case_sensitive(self):
        """Test only the literal NA is a missing marker."""
        with pytest.raises(CensoringParseError):
            parse_interval2("na", "1")
