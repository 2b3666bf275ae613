"""Weibull PH regression with one interval-censored covariate.

Each observation contributes

    exact covariate:    f(T|x)^delta S(T|x)^(1 - delta) f_theta(x_1)
    censored covariate: integral over the censoring region of
                        f(T|x)^delta S(T|x)^(1 - delta) f_theta(x_1) dx_1

with h(t|x) = lambda * gamma * t^(gamma - 1) * exp(beta'x). The covariate
density f_theta is fixed (two-stage estimation). The Bernoulli factor of the
observation status does not depend on (lambda, gamma, beta) and is left out
of the objective, the reported log-likelihood and the AIC unless a detection
limit is passed to `loglik_l2`.
"""

import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from numpy.typing import ArrayLike, NDArray

from .distributions import aft_to_ph, cdf_eval, density_logpdf, scalar_logpdf
from .errors import CensCovError, OptimizationError
from .inference import std_errors, wald_row
from .models import (
    CensCovFit,
    CensCovSettings,
    CensKind,
    CensoredValue,
    CovariateDensity,
    IntegrationSettings,
    SurvObservation,
    WeibullPH,
)
from .optimize import covariance_from_hessian, hessian, maximize
from .quadrature import integrate_censored_region
from .weibull_reg import default_names, fit_weibull_l1

logger = structlog.get_logger()

# exp() argument above which the integrand is treated as 0
_EXP_LIMIT = 700.0


def impute_at_bound(data: Sequence[SurvObservation]) -> List[SurvObservation]:
    """Replace each censored covariate by its finite bound (interval: midpoint).

    This is the limit-of-detection imputation: a left-censored value becomes
    the detection limit itself.
    """
    out = []
    for obs in data:
        v = obs.x_cens
        if v is not None and v.kind is not CensKind.EXACT:
            obs = obs.model_copy(update={"x_cens": CensoredValue.exact(v.finite_bound)})
        out.append(obs)
    return out


class _CensoredRow:
    __slots__ = ("log_t", "event", "x_exact", "region")

    def __init__(self, obs: SurvObservation, region: CensoredValue):
        self.log_t = math.log(obs.time)
        self.event = obs.event
        self.x_exact = np.asarray(obs.x_exact, dtype=float)
        self.region = region


def _covariate_value(obs: SurvObservation) -> CensoredValue:
    if obs.x_cens is None:
        raise ValueError("every observation needs a censored-covariate value")
    return obs.x_cens


class L2Likelihood:
    """log L2 as a function of (lambda, gamma, beta_cens, beta_exact...).

    Exact-covariate rows are evaluated as arrays; every censored row needs one
    adaptive quadrature per evaluation.

    Args:
        data: Observations; every row must carry `x_cens`
        density: Fixed covariate density f_theta
        settings: Quadrature tolerances
        detection_limit: When given, the constant log-probability of the
            observation status (log F(c) for censored rows, log(1 - F(c))
            for exact rows) is added
    """

    def __init__(
        self,
        data: Sequence[SurvObservation],
        density: CovariateDensity,
        settings: Optional[IntegrationSettings] = None,
        detection_limit: Optional[float] = None,
    ):
        if not data:
            raise ValueError("no observations")
        widths = {len(obs.x_exact) for obs in data}
        if len(widths) != 1:
            raise ValueError("all observations must carry the same exact covariates")
        self.n_exact_covariates = widths.pop()
        self.n_params = 3 + self.n_exact_covariates
        self.settings = settings or IntegrationSettings()
        self.density = density
        self.integration_failures = 0

        exact: List[SurvObservation] = []
        x1: List[float] = []
        self.censored: List[_CensoredRow] = []
        for obs in data:
            v = _covariate_value(obs)
            if v.kind is CensKind.EXACT:
                exact.append(obs)
                x1.append(v.finite_bound)
            else:
                self.censored.append(_CensoredRow(obs, v))
        self.n = len(data)
        self.n_events = sum(obs.event for obs in data)
        self.n_exact_rows = len(exact)

        self._log_t = np.log([obs.time for obs in exact])
        self._events = np.array([obs.event for obs in exact], dtype=float)
        self._x1 = np.asarray(x1, dtype=float)
        self._x_exact = np.array([obs.x_exact for obs in exact], dtype=float).reshape(
            len(exact), self.n_exact_covariates
        )
        # f_theta does not depend on the regression parameters
        self._density_term = float(np.sum(density_logpdf(density, self._x1))) if exact else 0.0
        if detection_limit is not None:
            p_cens = float(cdf_eval(density, detection_limit))
            with np.errstate(divide="ignore"):
                self._density_term += len(self.censored) * float(np.log(p_cens))
                self._density_term += len(exact) * float(np.log1p(-p_cens))
        self._logpdf = scalar_logpdf(density)

    def _exact_part(
        self, lam: float, gam: float, b1: float, b_exact: NDArray[np.float64]
    ) -> float:
        if self._log_t.size == 0:
            return 0.0
        eta = b1 * self._x1 + self._x_exact @ b_exact
        log_haz = math.log(lam) + math.log(gam) + (gam - 1.0) * self._log_t + eta
        with np.errstate(over="ignore"):
            cum = np.exp(math.log(lam) + gam * self._log_t + eta)
        return float(np.sum(self._events * log_haz - cum))

    def _integrand(
        self, event: int, b1: float, cum: float, logpdf: Callable[[float], float]
    ) -> Callable[[float], float]:
        def g(x: float) -> float:
            bx = b1 * x
            if bx > _EXP_LIMIT:
                return 0.0
            arg = event * bx - cum * math.exp(bx) + logpdf(x)
            return math.exp(arg) if arg > -_EXP_LIMIT else 0.0

        return g

    def __call__(self, theta: ArrayLike) -> float:
        params = np.asarray(theta, dtype=float)
        lam, gam, b1 = float(params[0]), float(params[1]), float(params[2])
        b_exact = params[3:]
        if not (lam > 0 and gam > 0):
            return -math.inf
        total = self._exact_part(lam, gam, b1, b_exact) + self._density_term
        log_lam, log_gam = math.log(lam), math.log(gam)
        for row in self.censored:
            eta_e = float(row.x_exact @ b_exact) if row.x_exact.size else 0.0
            log_cum = log_lam + gam * row.log_t + eta_e
            if log_cum > _EXP_LIMIT:
                return -math.inf
            g = self._integrand(row.event, b1, math.exp(log_cum), self._logpdf)
            result = integrate_censored_region(g, row.region, self.settings)
            if not result.converged:
                self.integration_failures += 1
            if not result.value > 0:
                return -math.inf
            if row.event:
                total += log_lam + log_gam + (gam - 1.0) * row.log_t + eta_e
            total += math.log(result.value)
        return total


def loglik_l2(
    params: Tuple[WeibullPH, Sequence[float]],
    data: Sequence[SurvObservation],
    density: CovariateDensity,
    settings: Optional[IntegrationSettings] = None,
    detection_limit: Optional[float] = None,
) -> float:
    """Log-likelihood L2 at one parameter point.

    Args:
        params: Baseline (lambda, gamma) and beta, censored covariate first
        data: Observations with a censored covariate on every row
        density: Fixed covariate density
        settings: Quadrature tolerances
        detection_limit: Include the constant observation-status factor

    Returns:
        log L2; -inf when a censored row has zero likelihood
    """
    ph, beta = params
    lik = L2Likelihood(data, density, settings, detection_limit)
    beta_arr = np.asarray(beta, dtype=float)
    if beta_arr.size != lik.n_params - 2:
        raise ValueError(f"expected {lik.n_params - 2} coefficients, got {beta_arr.size}")
    return lik(np.concatenate([[ph.lambda_, ph.gamma], beta_arr]))


def initial_values(
    data: Sequence[SurvObservation], names: Optional[Sequence[str]] = None
) -> Tuple[float, ...]:
    """Start from the Weibull regression on limit-of-detection imputed data."""
    try:
        fit = fit_weibull_l1(impute_at_bound(data), names)
        ph, beta = aft_to_ph(fit.params)
        return (ph.lambda_, ph.gamma, *(float(b) for b in beta))
    except (CensCovError, ValueError) as e:
        logger.warning("initial_fit_failed", error=str(e))
    times = np.array([obs.time for obs in data], dtype=float)
    events = sum(obs.event for obs in data)
    width = 1 + len(data[0].x_exact)
    return (max(events, 1) / float(times.sum()), 1.0, *([0.0] * width))


def fit_censcov(
    data: Sequence[SurvObservation],
    density: CovariateDensity,
    initial: Optional[Sequence[float]] = None,
    settings: Optional[CensCovSettings] = None,
    names: Optional[Sequence[str]] = None,
) -> CensCovFit:
    """Maximize L2 over (lambda, gamma, beta) with a fixed covariate density.

    lambda and gamma are optimized on the log scale. Standard errors come
    from the numerical Hessian on the natural scale; lambda and gamma get
    Wald intervals but no p-values.

    Args:
        data: Observations; `x_cens` on every row, exact covariates in `x_exact`
        density: Covariate density, usually from `onesample.density_from_fit`
        initial: Starting (lambda, gamma, beta...); imputation-based if omitted
        settings: Quadrature, optimizer and Hessian settings
        names: Covariate names, censored covariate first

    Returns:
        CensCovFit; non-convergence and a missing covariance are flagged on it

    Raises:
        OptimizationError: No events, or an infeasible starting point
    """
    settings = settings or CensCovSettings()
    lik = L2Likelihood(data, density, settings.integration)
    d = lik.n_params - 2
    names = tuple(names) if names is not None else default_names(d)
    if len(names) != d:
        raise ValueError(f"expected {d} covariate names, got {len(names)}")
    if lik.n_events == 0:
        raise OptimizationError("no events; the regression cannot be fitted")

    log = logger.bind(component="censcov_reg", n=lik.n, n_cens_cov=len(lik.censored))
    warnings: List[str] = []
    if lik.n_exact_rows == 0:
        warnings.append("no exactly observed covariate; its effect is weakly identified")
        log.warning("no_exact_covariate_rows")

    start = tuple(initial) if initial is not None else initial_values(data, names)
    if len(start) != lik.n_params:
        raise ValueError(f"initial vector must have {lik.n_params} entries")
    log.info("fitting_censcov", start=start)

    transforms = ["log", "log"] + ["identity"] * d
    result = maximize(lik, start, transforms, settings.optimizer)  # type: ignore[arg-type]
    if not result.converged:
        warnings.append(f"optimizer did not converge: {result.message}")

    lik.integration_failures = 0
    cov = covariance_from_hessian(hessian(lik, result.argmax, settings.hessian))
    if lik.integration_failures:
        warnings.append(
            f"{lik.integration_failures} quadratures hit the subdivision limit near the optimum"
        )
    if cov is None:
        warnings.append("observed information is not positive definite; no standard errors")
        log.warning("covariance_unavailable", argmax=result.argmax)

    ses = std_errors(cov, lik.n_params)
    conf = settings.conf_level
    rows = [
        wald_row("lambda", result.argmax[0], ses[0], conf, null=None),
        wald_row("gamma", result.argmax[1], ses[1], conf, null=None),
    ]
    rows += [
        wald_row(name, est, se, conf)
        for name, est, se in zip(names, result.argmax[2:], ses[2:])
    ]
    aic = -2.0 * result.value + 2.0 * lik.n_params
    log.info(
        "censcov_fit_complete",
        loglik=result.value,
        converged=result.converged,
        evaluations=result.function_evals,
    )
    return CensCovFit(
        coefficients=rows,
        loglik=result.value,
        aic=aic,
        n=lik.n,
        n_events=lik.n_events,
        n_cens_cov=len(lik.censored),
        converged=result.converged,
        covariance_available=cov is not None,
        covariance=None if cov is None else cov.tolist(),
        iterations=result.iterations,
        function_evals=result.function_evals,
        conf_level=conf,
        warnings=warnings,
    )
