"""Weibull regression with fully observed covariates, and its PH conversion.

The likelihood is fitted in the accelerated-failure-time convention
log T = mu + alpha'x + sigma * W, W standard extreme-value (minimum), over
(mu, log sigma, alpha). `convert_weibull` maps the fit to the
proportional-hazards form h(t|x) = lambda * gamma * t^(gamma - 1) * exp(beta'x)
with gamma = 1/sigma, lambda = exp(-mu/sigma) and beta = -alpha/sigma, and
propagates the joint covariance with the delta method.
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog
from numpy.typing import ArrayLike, NDArray

from .distributions import ph_to_aft
from .errors import NonIdentifiableError, OptimizationError
from .inference import delta_method, exp_row, std_errors, wald_row
from .models import (
    AFTFit,
    CensKind,
    CoefficientRow,
    OptimizerSettings,
    PHSummary,
    SurvObservation,
    WeibullAFT,
    WeibullPH,
    WeibullRegReport,
)
from .optimize import covariance_from_hessian, maximize

logger = structlog.get_logger()

_EULER_GAMMA = 0.5772156649015329
_NEWTON_STEPS = 25
_GRADIENT_TOL = 1e-9


def covariate_matrix(
    data: Sequence[SurvObservation],
) -> Tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Times, event indicators and covariate matrix of fully observed rows.

    The censored-covariate column, when present, comes first, followed by the
    exact covariates in their stored order.

    Raises:
        ValueError: If a censored covariate is not exactly observed or rows
            disagree on the number of covariates
    """
    if not data:
        raise ValueError("no observations")
    rows = []
    for i, obs in enumerate(data):
        row: List[float] = []
        if obs.x_cens is not None:
            if obs.x_cens.kind is not CensKind.EXACT:
                raise ValueError(
                    f"observation {i}: covariate is {obs.x_cens.kind.value}-censored; "
                    "impute it or use the censored-covariate fit"
                )
            row.append(float(obs.x_cens.low))  # type: ignore[arg-type]
        row.extend(obs.x_exact)
        rows.append(row)
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("all observations must carry the same covariates")
    times = np.array([obs.time for obs in data], dtype=float)
    events = np.array([obs.event for obs in data], dtype=float)
    return times, events, np.asarray(rows, dtype=float).reshape(len(data), width)


def default_names(d: int) -> Tuple[str, ...]:
    return tuple(f"x{j + 1}" for j in range(d))


class _AFTLikelihood:
    """log L1 of the AFT model with analytic first and second derivatives."""

    def __init__(
        self, times: NDArray[np.float64], events: NDArray[np.float64], x: NDArray[np.float64]
    ):
        self.log_t = np.log(times)
        self.events = events
        self.design = np.column_stack([np.ones(times.size), x])

    def _w(self, theta: NDArray[np.float64]) -> Tuple[NDArray[np.float64], float]:
        sigma = math.exp(theta[1])
        eta = self.design @ np.concatenate([theta[:1], theta[2:]])
        return (self.log_t - eta) / sigma, sigma

    def __call__(self, theta: NDArray[np.float64]) -> float:
        w, _ = self._w(theta)
        with np.errstate(over="ignore", invalid="ignore"):
            value = np.sum(self.events * (-theta[1] - self.log_t + w) - np.exp(w))
        return float(value)

    def derivatives(
        self, theta: NDArray[np.float64]
    ) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Gradient and Hessian over (mu, log sigma, alpha)."""
        w, sigma = self._w(theta)
        ew = np.exp(w)
        delta = self.events
        d_eta = (ew - delta) / sigma
        d_s = -delta + w * (ew - delta)
        d_eta2 = -ew / sigma**2
        d_eta_s = -(w * ew + ew - delta) / sigma
        d_s2 = -w * (ew - delta) - w * w * ew

        z = self.design
        p = z.shape[1] + 1
        # coefficient order: mu, log sigma, alpha
        index = np.r_[0, 2:p]
        grad = np.empty(p)
        grad[index] = z.T @ d_eta
        grad[1] = np.sum(d_s)
        hess = np.empty((p, p))
        hess[np.ix_(index, index)] = z.T @ (d_eta2[:, None] * z)
        cross = z.T @ d_eta_s
        hess[index, 1] = cross
        hess[1, index] = cross
        hess[1, 1] = np.sum(d_s2)
        return grad, hess


def _initial_values(lik: _AFTLikelihood) -> NDArray[np.float64]:
    """Least squares on log times, rescaled to the extreme-value error law."""
    coef, *_ = np.linalg.lstsq(lik.design, lik.log_t, rcond=None)
    resid = lik.log_t - lik.design @ coef
    sigma = max(float(np.std(resid)) * math.sqrt(6.0) / math.pi, 0.05)
    mu = float(coef[0]) + _EULER_GAMMA * sigma
    return np.concatenate([[mu, math.log(sigma)], coef[1:]])


def _newton_polish(
    lik: _AFTLikelihood, theta: NDArray[np.float64]
) -> Tuple[NDArray[np.float64], bool]:
    """Newton-Raphson with step halving from a simplex solution."""
    value = lik(theta)
    for _ in range(_NEWTON_STEPS):
        grad, hess = lik.derivatives(theta)
        if np.max(np.abs(grad)) < _GRADIENT_TOL * (1.0 + abs(value)):
            return theta, True
        try:
            step = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError:
            return theta, False
        scale = 1.0
        while scale > 1e-6:
            candidate = theta + scale * step
            cand_value = lik(candidate)
            if math.isfinite(cand_value) and cand_value >= value - 1e-12 * (1.0 + abs(value)):
                break
            scale *= 0.5
        else:
            return theta, False
        theta, value = candidate, cand_value
    grad, _ = lik.derivatives(theta)
    return theta, bool(np.max(np.abs(grad)) < _GRADIENT_TOL * (1.0 + abs(value)))


def fit_weibull_l1(
    data: Sequence[SurvObservation],
    names: Optional[Sequence[str]] = None,
    optimizer: Optional[OptimizerSettings] = None,
) -> AFTFit:
    """Fit a Weibull AFT regression to right-censored times with exact covariates.

    Events contribute log f(T|x), censored rows log S(T|x). The simplex
    solution is polished with Newton steps on the analytic derivatives, and
    the covariance is the inverse of the analytic observed information.

    Args:
        data: Observations; a censored covariate, if present, must be exact
        names: Covariate names, censored covariate first
        optimizer: Nelder-Mead settings

    Returns:
        AFTFit over (mu, log sigma, alpha)

    Raises:
        NonIdentifiableError: Fewer than d + 3 observations
        OptimizationError: No events
    """
    times, events, x = covariate_matrix(data)
    n, d = x.shape
    names = tuple(names) if names is not None else default_names(d)
    if len(names) != d:
        raise ValueError(f"expected {d} covariate names, got {len(names)}")
    if n < d + 3:
        raise NonIdentifiableError(f"at least {d + 3} observations are required, got {n}")
    n_events = int(events.sum())
    if n_events == 0:
        raise OptimizationError("no events; the Weibull regression cannot be fitted")

    log = logger.bind(component="weibull_reg", n=n, d=d)
    lik = _AFTLikelihood(times, events, x)
    start = _initial_values(lik)
    log.debug("fitting_weibull_l1", start=start.tolist())
    result = maximize(lik, start, None, optimizer)

    theta, polished = _newton_polish(lik, np.asarray(result.argmax))
    converged = result.converged or polished
    warnings: List[str] = []
    if not converged:
        warnings.append("optimizer did not converge; possible monotone likelihood")
        log.warning("weibull_l1_not_converged", message=result.message)

    _, hess = lik.derivatives(theta)
    cov = covariance_from_hessian(hess)
    if cov is None:
        warnings.append("observed information is not positive definite")
        log.warning("covariance_unavailable")

    log.info("weibull_l1_fit_complete", loglik=lik(theta), converged=converged)
    return AFTFit(
        params=WeibullAFT(
            mu=float(theta[0]), log_sigma=float(theta[1]), alpha=tuple(float(a) for a in theta[2:])
        ),
        names=names,
        covariance=None if cov is None else cov.tolist(),
        loglik=lik(theta),
        n=n,
        n_events=n_events,
        converged=converged,
        warnings=warnings,
    )


def aft_coefficients(fit: AFTFit, conf_level: float = 0.95) -> List[CoefficientRow]:
    """Coefficient rows on the AFT scale: (Intercept), Log(scale), covariates."""
    p = fit.params
    estimates = [p.mu, p.log_sigma, *p.alpha]
    labels = ["(Intercept)", "Log(scale)", *fit.names]
    ses = std_errors(fit.covariance, len(estimates))
    return [wald_row(name, est, se, conf_level) for name, est, se in zip(labels, estimates, ses)]


def convert_weibull(fit: AFTFit, conf_level: float = 0.95) -> PHSummary:
    """Proportional-hazards parameters of an AFT fit with delta-method inference.

    Args:
        fit: Weibull AFT fit
        conf_level: Level of the Wald intervals

    Returns:
        PHSummary; hazard-ratio and event-time-ratio intervals are exp of the
        beta and alpha intervals. Without a covariance only estimates are set.
    """
    return convert_aft(fit.params, fit.covariance, fit.names, conf_level)


def convert_aft(
    p: WeibullAFT,
    covariance: Optional[ArrayLike] = None,
    names: Optional[Sequence[str]] = None,
    conf_level: float = 0.95,
) -> PHSummary:
    """convert_weibull on bare parameters; covariance is over (mu, log sigma, alpha)."""
    sigma = p.sigma
    alpha = np.asarray(p.alpha, dtype=float)
    d = alpha.size
    gamma = 1.0 / sigma
    lam = math.exp(-p.mu / sigma)
    beta = -alpha / sigma

    cov_ph: Optional[NDArray[np.float64]] = None
    if covariance is not None:
        jac = np.zeros((2 + d, 2 + d))
        jac[0, 0] = -lam / sigma
        jac[0, 1] = lam * p.mu / sigma
        jac[1, 1] = -1.0 / sigma
        for j in range(d):
            jac[2 + j, 1] = alpha[j] / sigma
            jac[2 + j, 2 + j] = -1.0 / sigma
        cov_ph = delta_method(jac, covariance)

    ses = std_errors(cov_ph, 2 + d)
    names = tuple(names) if names is not None else default_names(d)
    aft_ses = std_errors(covariance, 2 + d)
    beta_rows = [
        wald_row(name, float(b), se, conf_level) for name, b, se in zip(names, beta, ses[2:])
    ]
    alpha_rows = [
        wald_row(name, float(a), se, conf_level)
        for name, a, se in zip(names, alpha, aft_ses[2:])
    ]
    return PHSummary(
        lambda_=wald_row("lambda", lam, ses[0], conf_level, null=None),
        gamma=wald_row("gamma", gamma, ses[1], conf_level, null=None),
        beta=beta_rows,
        hazard_ratios=[exp_row(row.name, row) for row in beta_rows],
        event_time_ratios=[exp_row(row.name, row) for row in alpha_rows],
        inference_available=cov_ph is not None,
        conf_level=conf_level,
    )


def ph_summary_to_aft(summary: PHSummary) -> WeibullAFT:
    """Analytic back-conversion of a PH summary to (mu, log sigma, alpha)."""
    ph = WeibullPH(lambda_=summary.lambda_.estimate, gamma=summary.gamma.estimate)
    return ph_to_aft(ph, [row.estimate for row in summary.beta])


def weibull_reg(
    data: Sequence[SurvObservation],
    names: Optional[Sequence[str]] = None,
    conf_level: float = 0.95,
    optimizer: Optional[OptimizerSettings] = None,
) -> WeibullRegReport:
    """Fit the AFT model and report it together with its PH conversion."""
    fit = fit_weibull_l1(data, names, optimizer)
    return WeibullRegReport(
        aft=fit,
        aft_coefficients=aft_coefficients(fit, conf_level),
        ph=convert_weibull(fit, conf_level),
    )
