"""Tests for the Breslow Cox fitter."""

import math

import numpy as np
import pytest

from censcov_surv.coxph import fit_cox
from censcov_surv.errors import OptimizationError
from censcov_surv.models import CensoredValue, SimConfig, SurvObservation
from censcov_surv.simulate import generate_trial


def _four_observations():
    return [
        SurvObservation(time=float(t), event=1, x_exact=(float(x),))
        for t, x in zip((1, 2, 3, 4), (1, 0, 1, 0))
    ]


def _exponential_ph_data():
    """200 rows, two covariates, log-hazard 0.5 x1 - 0.3 x2, censored at 2."""
    rng = np.random.default_rng(3)
    x = rng.normal(size=(200, 2))
    t = rng.exponential(1.0 / np.exp(x @ np.array([0.5, -0.3])))
    return [
        SurvObservation(time=float(ti), event=int(ti < 2.0), x_exact=tuple(xi.tolist()))
        for ti, xi in zip(np.minimum(t, 2.0), x)
    ]


def _partial_loglik(b):
    """Breslow partial log-likelihood of the 4-observation dataset."""
    e = np.exp(b)
    return b - np.log(2.0 * e + 2.0) - np.log(e + 2.0) + b - np.log(e + 1.0)


class TestFitCox:
    """Test fit_cox."""

    def test_matches_grid_search(self):
        """Test beta matches brute-force maximization on a fine grid."""
        grid = np.linspace(-5.0, 5.0, 1_000_001)
        oracle = grid[np.argmax(_partial_loglik(grid))]
        fit = fit_cox(_four_observations())
        assert fit.converged
        assert fit.beta[0] == pytest.approx(oracle, abs=1e-4)
        assert fit.partial_loglik == pytest.approx(float(_partial_loglik(fit.beta[0])), abs=1e-10)

    def test_score_vanishes(self):
        """Test every score component is below 1e-8 at the optimum."""
        fit = fit_cox(_exponential_ph_data(), names=("a", "b"))
        assert fit.converged
        assert fit.max_abs_score < 1e-8
        assert abs(fit.coefficient("a").estimate - 0.5) < 3 * fit.coefficient("a").std_error
        assert abs(fit.coefficient("b").estimate + 0.3) < 3 * fit.coefficient("b").std_error

    def test_monotone_time_transform_invariance(self):
        """Test beta depends on the times only through their ordering."""
        data = _exponential_ph_data()
        stretched = [obs.model_copy(update={"time": obs.time**2 + 1.0}) for obs in data]
        base, other = fit_cox(data), fit_cox(stretched)
        np.testing.assert_allclose(other.beta, base.beta, atol=1e-10)
        np.testing.assert_allclose(other.std_errors, base.std_errors, rtol=1e-8)

    def test_covariate_shift_invariance(self):
        """Test adding a constant to a covariate leaves beta and SE unchanged."""
        data = _exponential_ph_data()
        shifted = [
            obs.model_copy(update={"x_exact": (obs.x_exact[0] + 7.0, obs.x_exact[1])})
            for obs in data
        ]
        base, other = fit_cox(data), fit_cox(shifted)
        np.testing.assert_allclose(other.beta, base.beta, atol=1e-6)
        np.testing.assert_allclose(other.std_errors, base.std_errors, rtol=1e-5)

    def test_weibull_trial_recovery(self):
        """Test a simulated Weibull trial with exact covariates recovers beta within 3 SE."""
        cfg = SimConfig(cens_prop_r=0.0, cens_prop_o=0.0)
        fit = fit_cox(generate_trial(cfg, np.random.default_rng([31, 0])), names=("mrd", "tmt"))
        mrd, tmt = fit.coefficient("mrd"), fit.coefficient("tmt")
        assert abs(mrd.estimate - 0.7) < 3 * mrd.std_error
        assert abs(tmt.estimate) < 3 * tmt.std_error

    def test_censored_covariate_first(self):
        """Test an exact censored covariate is the first coefficient."""
        data = [
            obs.model_copy(update={"x_cens": CensoredValue.exact(float(i % 3))})
            for i, obs in enumerate(_four_observations())
        ]
        fit = fit_cox(data, names=("mrd", "tmt"))
        assert [row.name for row in fit.coefficients] == ["mrd", "tmt"]

    def test_constant_covariate(self):
        """Test a constant column is fixed at 0 with an infinite SE."""
        data = [
            obs.model_copy(update={"x_exact": (obs.x_exact[0], 1.0)})
            for obs in _four_observations()
        ]
        fit = fit_cox(data, names=("x", "const"))
        const = fit.coefficient("const")
        assert const.estimate == 0.0
        assert const.std_error == math.inf
        assert any("constant" in w for w in fit.warnings)
        assert fit.coefficient("x").estimate == pytest.approx(fit_cox(_four_observations()).beta[0])

    def test_separation_flags_non_convergence(self):
        """Test a perfectly separating covariate is flagged, not raised."""
        data = [
            SurvObservation(time=float(t), event=1, x_exact=(float(t <= 3),))
            for t in (1, 2, 3, 4, 5, 6)
        ]
        fit = fit_cox(data)
        assert not fit.converged
        assert fit.beta[0] > 5.0
        assert any("monotone" in w for w in fit.warnings)

    def test_no_events(self):
        """Test a dataset without events cannot be fitted."""
        data = [SurvObservation(time=float(t), event=0, x_exact=(t,)) for t in (1.0, 2.0)]
        with pytest.raises(OptimizationError):
            fit_cox(data)

    def test_name_count_checked(self):
        """Test the covariate name count must match."""
        with pytest.raises(ValueError):
            fit_cox(_four_observations(), names=("a", "b"))
