"""Unit tests for Pydantic models."""

import json
import math

import pytest
from pydantic import ValidationError

from censcov_surv.models import (
    AFTFit,
    CensCovFit,
    CoefficientRow,
    CovariateDensity,
    DensityFamily,
    KMCurve,
    ReportEnvelope,
    SimConfig,
    SurvObservation,
    WeibullAFT,
    WeibullPH,
)


class TestWeibullModels:
    """Test the Weibull parametrizations."""

    def test_lambda_alias(self):
        """Test WeibullPH accepts both the alias and the field name."""
        assert WeibullPH(**{"lambda": 0.75, "gamma": 3.1}).lambda_ == 0.75
        assert WeibullPH(lambda_=0.75, gamma=3.1).model_dump(by_alias=True) == {
            "lambda": 0.75,
            "gamma": 3.1,
        }

    def test_positive_parameters(self):
        """Test lambda and gamma must be positive and finite."""
        with pytest.raises(ValidationError):
            WeibullPH(lambda_=0.0, gamma=1.0)
        with pytest.raises(ValidationError):
            WeibullPH(lambda_=1.0, gamma=math.inf)

    def test_aft_sigma(self):
        """Test sigma is exp(log_sigma)."""
        assert WeibullAFT(mu=0.0, log_sigma=math.log(0.5)).sigma == pytest.approx(0.5)


class TestCovariateDensity:
    """Test CovariateDensity validation."""

    def test_valid(self):
        """Test parameter names follow the family."""
        d = CovariateDensity(family=DensityFamily.GAMMA, params=(2.0, 1.5))
        assert d.parameter_names == ("shape", "rate")
        assert d.positive_support

    def test_nonpositive_scale(self):
        """Test the second parameter must be > 0."""
        with pytest.raises(ValidationError, match="sigma must be > 0"):
            CovariateDensity(family=DensityFamily.NORMAL, params=(0.0, 0.0))

    def test_nonpositive_shape(self):
        """Test Gamma and Weibull shapes must be > 0."""
        with pytest.raises(ValidationError, match="shape must be > 0"):
            CovariateDensity(family=DensityFamily.WEIBULL, params=(-1.0, 1.0))

    def test_non_finite(self):
        """Test parameters must be finite."""
        with pytest.raises(ValidationError):
            CovariateDensity(family=DensityFamily.LOGISTIC, params=(math.nan, 1.0))


class TestResultModels:
    """Test validators on fit results."""

    def test_interval_must_bracket_estimate(self):
        """Test a CoefficientRow interval must contain its estimate."""
        with pytest.raises(ValidationError):
            CoefficientRow(name="b", estimate=2.0, ci_low=0.0, ci_high=1.0)

    def test_aft_covariance_square_and_symmetric(self):
        """Test AFTFit rejects malformed covariance matrices."""
        base = dict(
            params=WeibullAFT(mu=0.0, log_sigma=0.0),
            loglik=-1.0,
            n=5,
            n_events=3,
            converged=True,
        )
        AFTFit(covariance=[[1.0, 0.5], [0.5, 2.0]], **base)
        with pytest.raises(ValidationError, match="square"):
            AFTFit(covariance=[[1.0, 0.5]], **base)
        with pytest.raises(ValidationError, match="symmetric"):
            AFTFit(covariance=[[1.0, 0.5], [0.4, 2.0]], **base)

    def test_censcov_aic_consistency(self):
        """Test AIC must equal -2 loglik + 2 (2 + d)."""
        rows = [
            CoefficientRow(name="lambda", estimate=0.7),
            CoefficientRow(name="gamma", estimate=3.0),
            CoefficientRow(name="mrd", estimate=0.7),
        ]
        base = dict(
            coefficients=rows,
            loglik=-100.0,
            n=10,
            n_events=8,
            n_cens_cov=2,
            converged=True,
            covariance_available=False,
        )
        fit = CensCovFit(aic=206.0, **base)
        assert fit.names == ("mrd",)
        assert fit.beta == (0.7,)
        with pytest.raises(ValidationError, match="aic"):
            CensCovFit(aic=200.0, **base)

    def test_km_curve(self):
        """Test monotone survival and the step function."""
        curve = KMCurve(
            stratum="all",
            n=5,
            event_times=(1.0, 3.0),
            survival=(0.8, 0.5),
            at_risk=(5, 3),
            events=(1, 1),
        )
        assert curve.survival_at(0.5) == 1.0
        assert curve.survival_at(1.0) == 0.8
        assert curve.survival_at(2.9) == 0.8
        assert curve.survival_at(10.0) == 0.5
        with pytest.raises(ValidationError):
            KMCurve(
                stratum="all",
                n=2,
                event_times=(1.0, 2.0),
                survival=(0.5, 0.6),
                at_risk=(2, 1),
                events=(1, 1),
            )


class TestSurvObservation:
    """Test SurvObservation validation."""

    def test_time_must_be_positive(self):
        """Test follow-up times <= 0 are rejected."""
        with pytest.raises(ValidationError):
            SurvObservation(time=0.0, event=1)

    def test_event_is_binary(self):
        """Test the event indicator is 0 or 1."""
        with pytest.raises(ValidationError):
            SurvObservation(time=1.0, event=2)


class TestSimConfig:
    """Test SimConfig."""

    def test_reference_defaults(self):
        """Test defaults reproduce the reference configuration."""
        cfg = SimConfig()
        assert (cfg.mu_r, cfg.sigma_r, cfg.mu_o, cfg.sigma_o) == (-1.5, 1.5, -3.5, 1.5)
        assert (cfg.lambda_, cfg.gamma, cfg.beta_tmt, cfg.beta_mrd) == (0.75, 3.1, 0.0, 0.7)
        assert (cfg.cens_prop_r, cfg.cens_prop_o) == (0.05, 0.35)
        assert (cfg.n_per_arm, cfg.replications, cfg.seed) == (200, 200, 20150315)

    def test_unknown_field(self):
        """Test unknown fields are rejected."""
        with pytest.raises(ValidationError):
            SimConfig(lamda=0.5)

    def test_shares_below_one(self):
        """Test censored shares must lie in [0, 1)."""
        with pytest.raises(ValidationError):
            SimConfig(cens_prop_o=1.0)


class TestReportEnvelope:
    """Test the JSON report envelope."""

    def test_non_finite_numbers_serialize(self):
        """Test infinite values are written as JSON constants."""
        envelope = ReportEnvelope(
            command="cox", argv=["cox"], payload={"se": math.inf}, version="1.0.0"
        )
        text = envelope.model_dump_json()
        assert '"se":Infinity' in text
        assert json.loads(text)["payload"]["se"] == math.inf
