"""Cox proportional-hazards regression on the Breslow partial likelihood."""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog
from numpy.typing import NDArray

from .errors import OptimizationError
from .inference import std_errors, wald_row
from .models import CoxFit, SurvObservation
from .optimize import covariance_from_hessian
from .weibull_reg import covariate_matrix, default_names

logger = structlog.get_logger()

SCORE_TOL = 1e-8
# SE above this multiple of (1 + |beta|) means the coefficient is drifting to infinity
DIVERGENCE_RATIO = 1e3


class _BreslowRiskSets:
    """Risk-set sums at the distinct event times."""

    def __init__(
        self, times: NDArray[np.float64], events: NDArray[np.float64], x: NDArray[np.float64]
    ):
        event_times = np.unique(times[events > 0])
        # at_risk[j, i]: subject i still under observation at event time j
        self.at_risk = (times[None, :] >= event_times[:, None]).astype(float)
        failing = (times[None, :] == event_times[:, None]) & (events[None, :] > 0)
        self.deaths = failing.sum(axis=1).astype(float)
        self.x_deaths = failing.astype(float) @ x
        self.x = x

    def evaluate(
        self, beta: NDArray[np.float64]
    ) -> Tuple[float, NDArray[np.float64], NDArray[np.float64]]:
        """Partial log-likelihood, score and information at beta."""
        eta = self.x @ beta
        # the shift cancels between numerator and risk-set sum
        w = np.exp(eta - eta.max())
        s0 = self.at_risk @ w
        s1 = self.at_risk @ (w[:, None] * self.x)
        s2 = np.einsum("ji,ik,il->jkl", self.at_risk * w[None, :], self.x, self.x)
        mean = s1 / s0[:, None]

        loglik = float(
            np.sum(self.x_deaths @ beta) - np.sum(self.deaths * (np.log(s0) + eta.max()))
        )
        score = np.sum(self.x_deaths - self.deaths[:, None] * mean, axis=0)
        cov_terms = s2 / s0[:, None, None] - mean[:, :, None] * mean[:, None, :]
        info = np.einsum("j,jkl->kl", self.deaths, cov_terms)
        return loglik, score, info


def _newton_raphson(
    risk: _BreslowRiskSets, p: int, max_iterations: int
) -> Tuple[NDArray[np.float64], float, NDArray[np.float64], NDArray[np.float64], int, bool]:
    beta = np.zeros(p)
    loglik, score, info = risk.evaluate(beta)
    if p == 0:
        return beta, loglik, score, info, 0, True
    converged = False
    iteration = 0
    polished = False
    while iteration < max_iterations:
        if np.max(np.abs(score), initial=0.0) < SCORE_TOL:
            if polished:
                converged = True
                break
            polished = True
        iteration += 1
        try:
            delta = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            break
        step = 1.0
        while True:
            candidate = beta + step * delta
            cand_loglik, cand_score, cand_info = risk.evaluate(candidate)
            if math.isfinite(cand_loglik) and cand_loglik >= loglik - 1e-12 * (1.0 + abs(loglik)):
                break
            step *= 0.5
            if step < 1e-10:
                break
        if step < 1e-10:
            break
        beta, loglik, score, info = candidate, cand_loglik, cand_score, cand_info
    else:
        converged = bool(np.max(np.abs(score), initial=0.0) < SCORE_TOL)
    return beta, loglik, score, info, iteration, converged


def fit_cox(
    data: Sequence[SurvObservation],
    names: Optional[Sequence[str]] = None,
    conf_level: float = 0.95,
    max_iterations: int = 50,
) -> CoxFit:
    """Fit a Cox model by Newton-Raphson with step halving.

    Ties use the Breslow approximation. Converged means every score component
    is below 1e-8; a constant covariate is dropped from the fit and reported
    with beta = 0 and an infinite standard error.

    Args:
        data: Observations; a censored covariate, if present, must be exact
        names: Covariate names, censored covariate first
        conf_level: Level of the Wald intervals
        max_iterations: Newton-Raphson iteration limit

    Returns:
        CoxFit; a suspected monotone likelihood is flagged, not raised

    Raises:
        OptimizationError: No events
    """
    times, events, x = covariate_matrix(data)
    n, p = x.shape
    names = tuple(names) if names is not None else default_names(p)
    if len(names) != p:
        raise ValueError(f"expected {p} covariate names, got {len(names)}")
    if events.sum() == 0:
        raise OptimizationError("no events; the Cox model cannot be fitted")

    log = logger.bind(component="coxph", n=n, p=p)
    warnings: List[str] = []
    varying = np.ptp(x, axis=0) > 0
    for name in np.asarray(names)[~varying]:
        warnings.append(f"covariate {name} is constant; coefficient fixed at 0")
        log.warning("constant_covariate", covariate=str(name))

    keep = np.flatnonzero(varying)
    risk = _BreslowRiskSets(times, events, x[:, keep])
    beta_kept, loglik, score, info, iterations, converged = _newton_raphson(
        risk, keep.size, max_iterations
    )
    cov = covariance_from_hessian(-info)
    if converged and cov is not None:
        kept_se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
        converged = not bool(np.any(kept_se > DIVERGENCE_RATIO * (1.0 + np.abs(beta_kept))))
    if not converged:
        warnings.append("Newton-Raphson did not converge; possible monotone likelihood")
        log.warning("cox_not_converged", iterations=iterations, beta=beta_kept.tolist())

    if cov is None and keep.size:
        warnings.append("information matrix is singular; no standard errors")
    kept_ses = std_errors(cov, keep.size)

    beta = np.zeros(p)
    beta[keep] = beta_kept
    ses: List[Optional[float]] = [math.inf] * p
    for j, se in zip(keep, kept_ses):
        ses[j] = se
    rows = [wald_row(name, float(b), se, conf_level) for name, b, se in zip(names, beta, ses)]
    max_score = float(np.max(np.abs(score), initial=0.0))
    log.info("cox_fit_complete", partial_loglik=loglik, converged=converged, iterations=iterations)
    return CoxFit(
        coefficients=rows,
        partial_loglik=loglik,
        converged=converged,
        iterations=iterations,
        max_abs_score=max_score,
        warnings=warnings,
    )
