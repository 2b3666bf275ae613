"""Tests for the Weibull AFT regression and its PH conversion."""

import math

import numpy as np
import pytest

from censcov_surv.errors import NonIdentifiableError, OptimizationError
from censcov_surv.models import (
    AFTFit,
    CensoredValue,
    DensityFamily,
    SurvObservation,
    WeibullAFT,
)
from censcov_surv.onesample import fit_censored_sample
from censcov_surv.weibull_reg import (
    convert_aft,
    convert_weibull,
    covariate_matrix,
    fit_weibull_l1,
    ph_summary_to_aft,
    weibull_reg,
)


def _weibull_ph_data(rng, n, lam, gamma, beta, horizon=math.inf):
    """Weibull PH times for covariates x ~ N(0, 1), censored at the horizon."""
    x = rng.normal(size=(n, len(beta)))
    u = rng.uniform(size=n)
    t = (-np.log(u) / (lam * np.exp(x @ np.asarray(beta)))) ** (1.0 / gamma)
    return [
        SurvObservation(
            time=float(min(ti, horizon)), event=int(ti <= horizon), x_exact=tuple(xi.tolist())
        )
        for ti, xi in zip(t, x)
    ]


class TestCovariateMatrix:
    """Test assembly of the design matrix."""

    def test_censored_covariate_first(self):
        """Test an exact censored covariate is placed before the exact ones."""
        data = [
            SurvObservation(time=1.0, event=1, x_exact=(5.0,), x_cens=CensoredValue.exact(2.0)),
            SurvObservation(time=2.0, event=0, x_exact=(6.0,), x_cens=CensoredValue.exact(3.0)),
        ]
        times, events, x = covariate_matrix(data)
        np.testing.assert_array_equal(x, [[2.0, 5.0], [3.0, 6.0]])
        np.testing.assert_array_equal(events, [1.0, 0.0])
        np.testing.assert_array_equal(times, [1.0, 2.0])

    def test_censored_value_rejected(self):
        """Test a left-censored covariate must be imputed first."""
        data = [SurvObservation(time=1.0, event=1, x_cens=CensoredValue.left(2.0))]
        with pytest.raises(ValueError, match="left-censored"):
            covariate_matrix(data)


class TestFitWeibullL1:
    """Test fit_weibull_l1."""

    def test_exponential_null_model(self):
        """Test unit exponential data give mu near 0 and sigma near 1."""
        rng = np.random.default_rng(1)
        data = [SurvObservation(time=float(t), event=1) for t in rng.exponential(size=2000)]
        fit = fit_weibull_l1(data)
        se = [math.sqrt(fit.covariance[i][i]) for i in range(2)]
        assert abs(fit.params.mu) < 3 * se[0]
        assert abs(fit.params.log_sigma) < 3 * se[1]
        assert fit.converged

    def test_recovers_reference_parameters(self):
        """Test PH parameters of simulated data are recovered within 3 SE."""
        rng = np.random.default_rng(2015)
        data = _weibull_ph_data(rng, 1000, 0.75, 3.1, [0.7, 0.0], horizon=2.6)
        summary = convert_weibull(fit_weibull_l1(data, names=("mrd", "tmt")))
        assert abs(summary.lambda_.estimate - 0.75) < 3 * summary.lambda_.std_error
        assert abs(summary.gamma.estimate - 3.1) < 3 * summary.gamma.std_error
        mrd, tmt = summary.beta
        assert abs(mrd.estimate - 0.7) < 3 * mrd.std_error
        assert abs(tmt.estimate) < 3 * tmt.std_error

    def test_duplicated_rows_scale_standard_errors(self):
        """Test duplicating every row keeps estimates and divides SEs by sqrt(2)."""
        rng = np.random.default_rng(4)
        data = _weibull_ph_data(rng, 150, 0.5, 1.5, [0.4], horizon=2.0)
        single = fit_weibull_l1(data)
        double = fit_weibull_l1(data + data)
        np.testing.assert_allclose(
            [double.params.mu, double.params.log_sigma, *double.params.alpha],
            [single.params.mu, single.params.log_sigma, *single.params.alpha],
            atol=1e-6,
        )
        ratio = np.sqrt(np.diag(double.covariance) / np.diag(single.covariance))
        np.testing.assert_allclose(ratio, 1.0 / math.sqrt(2.0), rtol=1e-3)

    def test_agrees_with_one_sample_weibull(self):
        """Test the no-covariate model matches the one-sample Weibull fit."""
        rng = np.random.default_rng(8)
        times = 1.7 * rng.weibull(2.2, size=300)
        fit = fit_weibull_l1([SurvObservation(time=float(t), event=1) for t in times])
        summary = convert_weibull(fit)
        one = fit_censored_sample(
            [CensoredValue.exact(float(t)) for t in times], DensityFamily.WEIBULL
        )
        shape, scale = one.estimates
        assert summary.gamma.estimate == pytest.approx(shape, rel=1e-4)
        assert summary.lambda_.estimate == pytest.approx(scale ** (-shape), rel=1e-4)

    def test_gamma_standard_error_matches_bootstrap(self):
        """Test the delta-method SE of gamma against a parametric bootstrap."""
        rng = np.random.default_rng(99)
        data = _weibull_ph_data(rng, 300, 1.0, 2.0, [0.5])
        summary = convert_weibull(fit_weibull_l1(data))
        lam, gamma, beta = (
            summary.lambda_.estimate,
            summary.gamma.estimate,
            summary.beta[0].estimate,
        )
        x = np.array([obs.x_exact[0] for obs in data])
        boot = []
        for _ in range(400):
            u = rng.uniform(size=x.size)
            t = (-np.log(u) / (lam * np.exp(beta * x))) ** (1.0 / gamma)
            sample = [
                SurvObservation(time=float(ti), event=1, x_exact=(float(xi),))
                for ti, xi in zip(t, x)
            ]
            boot.append(1.0 / math.exp(fit_weibull_l1(sample).params.log_sigma))
        assert float(np.std(boot)) == pytest.approx(summary.gamma.std_error, rel=0.15)

    def test_no_events(self):
        """Test a dataset without events cannot be fitted."""
        data = [SurvObservation(time=float(t), event=0) for t in (1, 2, 3, 4)]
        with pytest.raises(OptimizationError):
            fit_weibull_l1(data)

    def test_too_few_rows(self):
        """Test fewer than d + 3 rows are not identifiable."""
        data = [SurvObservation(time=float(t), event=1, x_exact=(t,)) for t in (1.0, 2.0, 3.0)]
        with pytest.raises(NonIdentifiableError):
            fit_weibull_l1(data)

    def test_name_count_checked(self):
        """Test the covariate name count must match."""
        rng = np.random.default_rng(6)
        data = _weibull_ph_data(rng, 30, 1.0, 1.0, [0.1])
        with pytest.raises(ValueError):
            fit_weibull_l1(data, names=("a", "b"))


class TestConvertWeibull:
    """Test the AFT to PH conversion."""

    def test_substitution(self):
        """Test mu=1, sigma=0.5, alpha=1 gives lambda=exp(-2), gamma=2, beta=-2."""
        summary = convert_aft(WeibullAFT(mu=1.0, log_sigma=math.log(0.5), alpha=(1.0,)))
        assert summary.lambda_.estimate == pytest.approx(math.exp(-2.0), rel=1e-12)
        assert summary.gamma.estimate == pytest.approx(2.0, rel=1e-12)
        assert summary.beta[0].estimate == pytest.approx(-2.0, rel=1e-12)
        assert summary.hazard_ratios[0].estimate == pytest.approx(math.exp(-2.0), rel=1e-12)
        assert summary.event_time_ratios[0].estimate == pytest.approx(math.e, rel=1e-12)
        assert not summary.inference_available

    def test_zero_covariance(self):
        """Test a zero covariance gives zero standard errors."""
        fit = AFTFit(
            params=WeibullAFT(mu=0.0, log_sigma=0.0, alpha=(0.0,)),
            names=("x1",),
            covariance=[[0.0] * 3 for _ in range(3)],
            loglik=-1.0,
            n=10,
            n_events=5,
            converged=True,
        )
        summary = convert_weibull(fit)
        assert summary.lambda_.estimate == 1.0
        assert summary.gamma.estimate == 1.0
        assert summary.beta[0].estimate == 0.0
        assert summary.lambda_.std_error == 0.0
        assert summary.gamma.std_error == 0.0
        assert summary.beta[0].std_error == 0.0

    def test_delta_method_against_numerical_jacobian(self):
        """Test propagated SEs match a finite-difference Jacobian."""
        params = np.array([0.4, math.log(0.7), -0.3])
        cov = np.array([[0.04, 0.01, 0.0], [0.01, 0.02, 0.005], [0.0, 0.005, 0.03]])

        def to_ph(theta):
            sigma = math.exp(theta[1])
            return np.array([math.exp(-theta[0] / sigma), 1.0 / sigma, -theta[2] / sigma])

        jac = np.empty((3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = 1e-6
            jac[:, j] = (to_ph(params + e) - to_ph(params - e)) / 2e-6
        expected = np.sqrt(np.diag(jac @ cov @ jac.T))

        summary = convert_aft(
            WeibullAFT(mu=params[0], log_sigma=params[1], alpha=(params[2],)), cov
        )
        got = [summary.lambda_.std_error, summary.gamma.std_error, summary.beta[0].std_error]
        np.testing.assert_allclose(got, expected, rtol=1e-6)

    def test_lambda_and_gamma_have_no_p_value(self):
        """Test only the regression coefficients are tested against 0."""
        cov = np.eye(3) * 0.01
        summary = convert_aft(WeibullAFT(mu=0.1, log_sigma=-0.2, alpha=(0.5,)), cov)
        assert summary.lambda_.p_value is None
        assert summary.gamma.p_value is None
        assert summary.beta[0].p_value is not None
        assert summary.hazard_ratios[0].p_value == summary.beta[0].p_value

    def test_back_conversion(self):
        """Test converting and converting back recovers the AFT parameters."""
        rng = np.random.default_rng(21)
        for _ in range(50):
            params = WeibullAFT(
                mu=float(rng.normal()),
                log_sigma=float(rng.normal(scale=0.5)),
                alpha=tuple(rng.normal(size=3).tolist()),
            )
            back = ph_summary_to_aft(convert_aft(params))
            assert back.mu == pytest.approx(params.mu, abs=1e-12)
            assert back.log_sigma == pytest.approx(params.log_sigma, abs=1e-12)
            np.testing.assert_allclose(back.alpha, params.alpha, atol=1e-12)

    def test_report(self):
        """Test the combined report carries both parametrizations."""
        rng = np.random.default_rng(30)
        data = _weibull_ph_data(rng, 200, 0.75, 3.1, [0.7], horizon=2.6)
        report = weibull_reg(data, names=("mrd",))
        assert [row.name for row in report.aft_coefficients] == [
            "(Intercept)",
            "Log(scale)",
            "mrd",
        ]
        assert report.ph.beta[0].name == "mrd"
        assert report.ph.inference_available
