"""Simulated two-arm trials with a limit-of-detection covariate, and the
three-method comparison (censored-covariate fit versus Weibull and Cox
regressions on data imputed at the detection limit).

Replication r draws from `numpy.random.default_rng([seed, r])`, so results
do not depend on the number of workers or the order replications finish in.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np
import pandas as pd
import structlog
from scipy import stats

from .censcov_reg import fit_censcov, impute_at_bound
from .coxph import fit_cox
from .errors import CensCovError, IngestError
from .models import (
    CensCovSettings,
    CensoredValue,
    CensStatus,
    DensityFamily,
    MethodDiagnostics,
    ParameterSummary,
    ReplicationEstimate,
    SimConfig,
    SimMethod,
    SimReport,
    SurvObservation,
)
from .onesample import density_from_fit, fit_censored_sample
from .weibull_reg import convert_weibull, fit_weibull_l1

logger = structlog.get_logger()

# Covariate order in every fit: censored covariate first, then treatment
COVARIATE_NAMES = ("mrd", "tmt")

# A replication raising any of these counts as failed; the study goes on
FIT_ERRORS = (CensCovError, ValueError, ArithmeticError, np.linalg.LinAlgError)

METHOD_PARAMETERS: Dict[SimMethod, tuple[str, ...]] = {
    SimMethod.CENSCOV: ("lambda", "gamma", "beta_tmt", "beta_mrd"),
    SimMethod.WEIBULL_LOD: ("lambda", "gamma", "beta_tmt", "beta_mrd"),
    SimMethod.COX_LOD: ("beta_tmt", "beta_mrd"),
}


def detection_limit(mu: float, sigma: float, proportion: float) -> float:
    """Normal quantile leaving `proportion` of the covariate below it."""
    if proportion <= 0:
        return -math.inf
    return float(stats.norm.ppf(proportion, loc=mu, scale=sigma))


def _arm(
    cfg: SimConfig,
    rng: np.random.Generator,
    mu: float,
    sigma: float,
    proportion: float,
    tmt: int,
) -> List[SurvObservation]:
    n = cfg.n_per_arm
    x = rng.normal(mu, sigma, n)
    u = rng.uniform(np.finfo(float).tiny, 1.0, n)
    scale = cfg.lambda_ * np.exp(cfg.beta_tmt * tmt + cfg.beta_mrd * x)
    # inverse of S(z) = exp(-scale * z^gamma)
    z = (-np.log(u) / scale) ** (1.0 / cfg.gamma)
    time = np.minimum(z, cfg.endpoint_horizon)
    event = (z <= cfg.endpoint_horizon).astype(int)
    lod = detection_limit(mu, sigma, proportion)

    rows = []
    for xi, ti, ei in zip(x, time, event):
        value = CensoredValue.left(lod) if xi <= lod else CensoredValue.exact(float(xi))
        rows.append(
            SurvObservation(time=float(ti), event=int(ei), x_exact=(float(tmt),), x_cens=value)
        )
    return rows


def generate_trial(cfg: SimConfig, rng: np.random.Generator) -> List[SurvObservation]:
    """One simulated trial: arm R (tmt = 0) followed by arm O (tmt = 1).

    The covariate is Normal per arm and left-censored at the arm's true Normal
    quantile for the configured proportion. Event times are Weibull PH with
    rate lambda * exp(beta_tmt * tmt + beta_mrd * x), censored administratively
    at `endpoint_horizon`.
    """
    return _arm(cfg, rng, cfg.mu_r, cfg.sigma_r, cfg.cens_prop_r, 0) + _arm(
        cfg, rng, cfg.mu_o, cfg.sigma_o, cfg.cens_prop_o, 1
    )


class _ReplicationOutcome(NamedTuple):
    estimates: List[ReplicationEstimate]
    cens_fraction_r: float
    cens_fraction_o: float
    endpoint_censored: float


def _failed(replication: int, method: SimMethod, error: Exception) -> ReplicationEstimate:
    logger.warning(
        "replication_failed", replication=replication, method=method.value, error=str(error)
    )
    return ReplicationEstimate(replication=replication, method=method, converged=False)


def _fit_censcov(
    replication: int, data: List[SurvObservation], settings: CensCovSettings
) -> ReplicationEstimate:
    method = SimMethod.CENSCOV
    try:
        pooled = fit_censored_sample(
            [obs.x_cens for obs in data if obs.x_cens is not None], DensityFamily.NORMAL
        )
        fit = fit_censcov(data, density_from_fit(pooled), settings=settings, names=COVARIATE_NAMES)
        mrd, tmt = fit.coefficient("mrd"), fit.coefficient("tmt")
        return ReplicationEstimate(
            replication=replication,
            method=method,
            converged=fit.converged,
            estimates={
                "lambda": fit.lambda_,
                "gamma": fit.gamma,
                "beta_tmt": tmt.estimate,
                "beta_mrd": mrd.estimate,
            },
            p_value_tmt=tmt.p_value,
        )
    except FIT_ERRORS as e:
        return _failed(replication, method, e)


def _fit_weibull_lod(replication: int, imputed: List[SurvObservation]) -> ReplicationEstimate:
    method = SimMethod.WEIBULL_LOD
    try:
        fit = fit_weibull_l1(imputed, COVARIATE_NAMES)
        summary = convert_weibull(fit)
        mrd, tmt = summary.beta
        return ReplicationEstimate(
            replication=replication,
            method=method,
            converged=fit.converged,
            estimates={
                "lambda": summary.lambda_.estimate,
                "gamma": summary.gamma.estimate,
                "beta_tmt": tmt.estimate,
                "beta_mrd": mrd.estimate,
            },
            p_value_tmt=tmt.p_value,
        )
    except FIT_ERRORS as e:
        return _failed(replication, method, e)


def _fit_cox_lod(replication: int, imputed: List[SurvObservation]) -> ReplicationEstimate:
    method = SimMethod.COX_LOD
    try:
        fit = fit_cox(imputed, COVARIATE_NAMES)
        return ReplicationEstimate(
            replication=replication,
            method=method,
            converged=fit.converged,
            estimates={"beta_tmt": fit.beta[1], "beta_mrd": fit.beta[0]},
            p_value_tmt=fit.coefficient("tmt").p_value,
        )
    except FIT_ERRORS as e:
        return _failed(replication, method, e)


def run_replication(
    cfg: SimConfig, replication: int, settings: Optional[CensCovSettings] = None
) -> _ReplicationOutcome:
    """Simulate trial `replication` and fit all three methods to it."""
    rng = np.random.default_rng([cfg.seed, replication])
    data = generate_trial(cfg, rng)
    imputed = impute_at_bound(data)
    n = cfg.n_per_arm
    censored = [
        obs.x_cens is not None and obs.x_cens.status is CensStatus.CENSORED for obs in data
    ]
    estimates = [
        _fit_censcov(replication, data, settings or CensCovSettings()),
        _fit_weibull_lod(replication, imputed),
        _fit_cox_lod(replication, imputed),
    ]
    logger.debug("replication_complete", replication=replication)
    return _ReplicationOutcome(
        estimates=estimates,
        cens_fraction_r=sum(censored[:n]) / n,
        cens_fraction_o=sum(censored[n:]) / n,
        endpoint_censored=sum(1 - obs.event for obs in data) / len(data),
    )


def _true_values(cfg: SimConfig) -> Dict[str, float]:
    return {
        "lambda": cfg.lambda_,
        "gamma": cfg.gamma,
        "beta_tmt": cfg.beta_tmt,
        "beta_mrd": cfg.beta_mrd,
    }


def summarize(
    cfg: SimConfig, estimates: Sequence[ReplicationEstimate]
) -> tuple[List[ParameterSummary], List[MethodDiagnostics]]:
    """Bias, MSE and type-I error per method from converged replications.

    The variance is the population variance over replications, so
    mse == bias**2 + empirical_se**2.
    """
    truth = _true_values(cfg)
    summaries: List[ParameterSummary] = []
    diagnostics: List[MethodDiagnostics] = []
    reference: Dict[str, ParameterSummary] = {}

    for method, parameters in METHOD_PARAMETERS.items():
        used = [e for e in estimates if e.method is method and e.converged]
        n_failed = sum(1 for e in estimates if e.method is method and not e.converged)
        p_values = [e.p_value_tmt for e in used if e.p_value_tmt is not None]
        rejection = (
            sum(1 for p in p_values if p < cfg.alpha) / len(p_values) if p_values else None
        )
        diagnostics.append(
            MethodDiagnostics(
                method=method,
                n_converged=len(used),
                n_failed=n_failed,
                rejection_rate_tmt=rejection,
            )
        )
        if not used:
            continue
        for parameter in parameters:
            values = np.array([e.estimates[parameter] for e in used], dtype=float)
            mean = float(values.mean())
            bias = mean - truth[parameter]
            variance = float(np.mean((values - mean) ** 2))
            summary = ParameterSummary(
                method=method,
                parameter=parameter,
                true_value=truth[parameter],
                n_used=len(used),
                mean_estimate=mean,
                bias=bias,
                mse=bias**2 + variance,
                empirical_se=math.sqrt(variance),
            )
            if method is SimMethod.CENSCOV:
                reference[parameter] = summary
            elif parameter in reference:
                ref = reference[parameter]
                summary = summary.model_copy(
                    update={
                        "relative_bias": abs(bias / ref.bias) if ref.bias else None,
                        "relative_mse": summary.mse / ref.mse if ref.mse else None,
                    }
                )
            summaries.append(summary)
    return summaries, diagnostics


def run_study(cfg: SimConfig, settings: Optional[CensCovSettings] = None) -> SimReport:
    """Run `cfg.replications` simulated trials and compare the three methods.

    Replications whose fit fails or does not converge are excluded from the
    summaries and counted per method.
    """
    log = logger.bind(component="simulate", replications=cfg.replications, workers=cfg.workers)
    log.info("simulation_started")
    m = cfg.replications
    outcome_list: List[_ReplicationOutcome]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcome_list = list(pool.map(run_replication, [cfg] * m, range(m), [settings] * m))
    else:
        outcome_list = [run_replication(cfg, r, settings) for r in range(m)]

    estimates = [e for o in outcome_list for e in o.estimates]
    summaries, diagnostics = summarize(cfg, estimates)
    report = SimReport(
        config=cfg,
        summaries=summaries,
        methods=diagnostics,
        replications=estimates,
        mean_cens_fraction_r=float(np.mean([o.cens_fraction_r for o in outcome_list])),
        mean_cens_fraction_o=float(np.mean([o.cens_fraction_o for o in outcome_list])),
        mean_endpoint_censored=float(np.mean([o.endpoint_censored for o in outcome_list])),
    )
    log.info(
        "simulation_complete",
        failed={d.method.value: d.n_failed for d in diagnostics},
    )
    return report


def load_sim_config(
    path: Union[str, Path], overrides: Optional[Dict[str, object]] = None
) -> SimConfig:
    """Read a flat `key = value` file whose keys are SimConfig field names.

    Blank lines and `#` comments are ignored. Unknown keys fail validation.

    Raises:
        IngestError: Lines without `=` or repeated keys
        pydantic.ValidationError: Unknown keys or invalid values
    """
    values: Dict[str, object] = {}
    problems: List[str] = []
    for number, line in enumerate(Path(path).read_text().splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            problems.append(f"line {number}: expected key = value")
            continue
        key, value = (part.strip() for part in content.split("=", 1))
        if key in values:
            problems.append(f"line {number}: duplicate key {key!r}")
        values[key] = value
    if problems:
        raise IngestError(problems)
    values.update(overrides or {})
    return SimConfig.model_validate(values)


def estimates_frame(report: SimReport) -> pd.DataFrame:
    """One row per replication and method with every estimate as a column."""
    records = [
        {
            "replication": e.replication,
            "method": e.method.value,
            "converged": e.converged,
            "p_value_tmt": e.p_value_tmt,
            **e.estimates,
        }
        for e in report.replications
    ]
    columns = [
        "replication",
        "method",
        "converged",
        "p_value_tmt",
        "lambda",
        "gamma",
        "beta_tmt",
        "beta_mrd",
    ]
    return pd.DataFrame.from_records(records, columns=columns)
