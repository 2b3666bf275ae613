"""Tests for the censored two-sample mean difference."""

import math

import numpy as np
import pytest
from scipy import stats

from censcov_surv.models import CensoredValue
from censcov_surv.twosample import normal_mean_diff


def _sample(rng, n, mu, sigma, share):
    x = rng.normal(mu, sigma, size=n)
    c = stats.norm.ppf(share, mu, sigma)
    return [CensoredValue.left(c) if v <= c else CensoredValue.exact(float(v)) for v in x]


class TestNormalMeanDiff:
    """Test normal_mean_diff."""

    def test_recovers_arm_difference(self):
        """Test arms with means -1.5 and -3.5 give delta = 2 within 3 SE."""
        rng = np.random.default_rng(42)
        arm_r = _sample(rng, 500, -1.5, 1.5, 0.05)
        arm_o = _sample(rng, 500, -3.5, 1.5, 0.35)
        fit = normal_mean_diff(arm_r, arm_o)
        assert abs(fit.delta.estimate - 2.0) < 3 * fit.delta.std_error
        assert fit.delta.p_value < 1e-10

    def test_standard_error_combines_samples(self):
        """Test SE(delta) = sqrt(SE(mu1)^2 + SE(mu2)^2) and delta = mu1 - mu2."""
        rng = np.random.default_rng(1)
        fit = normal_mean_diff(_sample(rng, 80, 0.0, 1.0, 0.2), _sample(rng, 60, 0.5, 2.0, 0.2))
        assert fit.delta.estimate == fit.mu1.estimate - fit.mu2.estimate
        expected = math.sqrt(fit.mu1.std_error**2 + fit.mu2.std_error**2)
        assert math.isclose(fit.delta.std_error, expected, rel_tol=1e-12)

    def test_row_names(self):
        """Test the rows are renamed per sample."""
        rng = np.random.default_rng(2)
        fit = normal_mean_diff(_sample(rng, 30, 0.0, 1.0, 0.1), _sample(rng, 30, 0.0, 1.0, 0.1))
        assert [row.name for row in fit.rows] == ["mu1", "mu2", "sigma1", "sigma2", "delta"]

    def test_identical_samples(self):
        """Test the same sample twice gives delta = 0 and p = 1."""
        sample = _sample(np.random.default_rng(3), 60, -1.0, 1.2, 0.2)
        fit = normal_mean_diff(sample, list(sample))
        assert fit.delta.estimate == 0.0
        assert fit.delta.p_value == 1.0

    def test_swapping_samples_negates_delta(self):
        """Test swapping the samples flips delta and keeps SE and p."""
        rng = np.random.default_rng(4)
        first = _sample(rng, 70, -1.5, 1.5, 0.05)
        second = _sample(rng, 70, -2.0, 1.5, 0.35)
        forward = normal_mean_diff(first, second)
        backward = normal_mean_diff(second, first)
        assert backward.delta.estimate == -forward.delta.estimate
        assert backward.delta.std_error == forward.delta.std_error
        assert backward.delta.p_value == pytest.approx(forward.delta.p_value, rel=1e-12)

    def test_shifting_sample_shifts_delta(self):
        """Test adding k to every bound of sample 1 adds k to delta."""
        rng = np.random.default_rng(5)
        first = _sample(rng, 80, 0.0, 1.0, 0.25)
        second = _sample(rng, 80, 0.3, 1.0, 0.25)
        k = 1.75
        shifted = [
            CensoredValue(
                low=None if v.low is None else v.low + k,
                high=None if v.high is None else v.high + k,
            )
            for v in first
        ]
        base = normal_mean_diff(first, second)
        moved = normal_mean_diff(shifted, second)
        assert moved.delta.estimate == pytest.approx(base.delta.estimate + k, abs=1e-6)
