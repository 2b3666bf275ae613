"""FastMCP server exposing the censored-covariate survival estimators."""

import asyncio
from pathlib import Path
from typing import List, Optional

import numpy as np
import structlog
from fastmcp import FastMCP

from .censcov_reg import fit_censcov, impute_at_bound
from .coxph import fit_cox
from .diagnostics import kaplan_meier, weibull_diag
from .models import (
    CensCovSettings,
    CensoredRecord,
    CensoredValue,
    CovariateDensity,
    DensityFamily,
    ObservationRecord,
    SimConfig,
    SurvObservation,
    WeibullAFT,
)
from .onesample import density_from_fit, fit_censored_sample
from .simulate import generate_trial
from .twosample import normal_mean_diff
from .weibull_reg import convert_aft, weibull_reg

logger = structlog.get_logger()

# Initialize FastMCP server
mcp = FastMCP("censcov")


def _censored(records: List[CensoredRecord]) -> List[CensoredValue]:
    return [CensoredValue(low=r.low, high=r.high) for r in records]


def _observations(records: List[ObservationRecord]) -> List[SurvObservation]:
    out = []
    for r in records:
        x_cens = None
        if r.low is not None or r.high is not None:
            x_cens = CensoredValue(low=r.low, high=r.high)
        out.append(
            SurvObservation(time=r.time, event=r.event, x_exact=tuple(r.covariates), x_cens=x_cens)
        )
    return out


def _names(records: List[ObservationRecord], names: Optional[List[str]]) -> List[str]:
    """Covariate names: `mrd` first when a censored covariate is present, then x1, x2, ..."""
    if names:
        return names
    has_cens = any(r.low is not None or r.high is not None for r in records)
    width = len(records[0].covariates) if records else 0
    return (["mrd"] if has_cens else []) + [f"x{j + 1}" for j in range(width)]


# ============================================================================
# TOOLS
# ============================================================================


@mcp.tool(name="censcov__convert_weibull")
async def convert_weibull(
    mu: float,
    log_sigma: float,
    alpha: Optional[List[float]] = None,
    covariance: Optional[List[List[float]]] = None,
    names: Optional[List[str]] = None,
    conf_level: float = 0.95,
) -> dict:
    """
    Converts Weibull AFT parameters to the proportional-hazards form.

    Maps log T = mu + alpha'x + sigma * W to h(t|x) = lambda * gamma * t^(gamma-1) * exp(beta'x)
    with gamma = 1/sigma, lambda = exp(-mu/sigma), beta = -alpha/sigma.

    **Examples**:
    - "Convert survreg output mu=1, log(scale)=log(0.5), alpha=1"
      → lambda=exp(-2), gamma=2, beta=-2
    - "Hazard ratio of a treatment with AFT coefficient 0.3" → pass alpha=[0.3]

    **Provides**:
    - lambda, gamma and beta with delta-method standard errors (when a covariance is given)
    - Hazard ratios exp(beta) and event time ratios exp(alpha) with Wald intervals

    **Use this tool when**:
    - Translating accelerated-failure-time output into hazard ratios
    - Comparing a Weibull fit with a Cox model

    Args:
        mu: AFT intercept
        log_sigma: Log of the AFT scale
        alpha: AFT regression coefficients (default: none)
        covariance: Covariance of (mu, log_sigma, alpha...) for inference (optional)
        names: Covariate names (default: x1, x2, ...)
        conf_level: Wald interval level (default: 0.95)

    Returns:
        Dictionary containing lambda, gamma, beta, hazard_ratios, event_time_ratios
        (coefficient rows) and inference_available.
    """
    params = WeibullAFT(mu=mu, log_sigma=log_sigma, alpha=tuple(alpha or ()))
    summary = convert_aft(params, covariance, names, conf_level)
    return summary.model_dump(by_alias=True)


@mcp.tool(name="censcov__fit_censored_sample")
async def fit_censored_sample_tool(
    values: List[CensoredRecord],
    family: DensityFamily = DensityFamily.NORMAL,
    conf_level: float = 0.95,
) -> dict:
    """
    Fits a distribution to one sample with left-, right- or interval-censored values.

    Each value is an interval2 pair: low == high is exact, low missing is
    left-censored (e.g. below a detection limit), high missing is right-censored.

    **Examples**:
    - "Estimate mean and sd of MRD with values below the detection limit" → family: normal
    - "Gamma fit to assay concentrations with an upper reporting limit" → family: gamma

    **Families**: normal (mu, sigma), logistic (location, scale), gamma (shape, rate),
    weibull (shape, scale).

    Args:
        values: Censored observations as {low, high} pairs (at least 3)
        family: Distribution family (default: normal)
        conf_level: Wald interval level (default: 0.95)

    Returns:
        Dictionary containing coefficients (two rows named after the family
        parameters), loglik, per-kind counts, converged and covariance.
    """
    fit = await asyncio.to_thread(fit_censored_sample, _censored(values), family, conf_level)
    return fit.model_dump()


@mcp.tool(name="censcov__normal_mean_diff")
async def normal_mean_diff_tool(
    sample1: List[CensoredRecord],
    sample2: List[CensoredRecord],
    conf_level: float = 0.95,
) -> dict:
    """
    Estimates the difference of means of two censored Normal samples.

    Each sample gets its own variance; SE(delta) = sqrt(SE(mu1)^2 + SE(mu2)^2).

    **Examples**:
    - "Does MRD differ between the two treatment arms?" → one sample per arm

    Args:
        sample1: First sample as {low, high} pairs
        sample2: Second sample as {low, high} pairs
        conf_level: Wald interval level (default: 0.95)

    Returns:
        Dictionary containing mu1, mu2, sigma1, sigma2 and delta = mu1 - mu2 rows.
    """
    fit = await asyncio.to_thread(
        normal_mean_diff, _censored(sample1), _censored(sample2), conf_level
    )
    return fit.model_dump()


@mcp.tool(name="censcov__fit_weibull_reg")
async def fit_weibull_reg(
    observations: List[ObservationRecord],
    names: Optional[List[str]] = None,
    conf_level: float = 0.95,
) -> dict:
    """
    Fits a Weibull regression with fully observed covariates and converts it to PH form.

    A censored covariate given as {low, high} is imputed at its bound (limit of
    detection substitution) and enters first.

    **Use this tool when**:
    - All covariates are measured exactly
    - Comparing with the censored-covariate fit on the same data

    Args:
        observations: Rows with time, event, optional low/high and covariates
        names: Covariate names, censored covariate first (default: mrd, x1, ...)
        conf_level: Wald interval level (default: 0.95)

    Returns:
        Dictionary containing aft (the fit), aft_coefficients and ph (PH summary).
    """
    data = impute_at_bound(_observations(observations))
    report = await asyncio.to_thread(
        weibull_reg, data, _names(observations, names), conf_level
    )
    return report.model_dump(by_alias=True)


@mcp.tool(name="censcov__fit_censcov")
async def fit_censcov_tool(
    observations: List[ObservationRecord],
    density_family: DensityFamily = DensityFamily.NORMAL,
    density_params: Optional[List[float]] = None,
    names: Optional[List[str]] = None,
    conf_level: float = 0.95,
) -> dict:
    """
    Fits the Weibull PH regression with one interval-censored covariate.

    Censored covariate values are integrated out against a fixed covariate
    density. Without density_params the density is first estimated from the
    pooled censored covariate sample (two-stage workflow).

    **Examples**:
    - "PFS on treatment and MRD with MRD below the detection limit" →
      observations with low=None, high=<limit> for the censored rows

    **Performance**: one quadrature per censored row and likelihood call;
    a few seconds for 400 rows.

    Args:
        observations: Rows with time, event, low/high of the censored covariate
            and the exact covariates
        density_family: Family of the covariate density (default: normal)
        density_params: Fixed density parameters; estimated when omitted
        names: Covariate names, censored covariate first (default: mrd, x1, ...)
        conf_level: Wald interval level (default: 0.95)

    Returns:
        Dictionary containing density and fit (lambda, gamma and covariate rows,
        AIC, counts, converged, warnings).
    """
    data = _observations(observations)
    if density_params is not None:
        density = CovariateDensity(
            family=density_family, params=(density_params[0], density_params[1])
        )
    else:
        pooled = [obs.x_cens for obs in data if obs.x_cens is not None]
        first_stage = await asyncio.to_thread(
            fit_censored_sample, pooled, density_family, conf_level
        )
        density = density_from_fit(first_stage)
    fit = await asyncio.to_thread(
        fit_censcov,
        data,
        density,
        None,
        CensCovSettings(conf_level=conf_level),
        _names(observations, names),
    )
    logger.info("tool_fit_censcov", n=fit.n, converged=fit.converged)
    return {"density": density.model_dump(), "fit": fit.model_dump()}


@mcp.tool(name="censcov__fit_cox")
async def fit_cox_tool(
    observations: List[ObservationRecord],
    names: Optional[List[str]] = None,
    conf_level: float = 0.95,
) -> dict:
    """
    Fits a Cox proportional-hazards model (Breslow ties).

    A censored covariate given as {low, high} is imputed at its bound.

    Args:
        observations: Rows with time, event, optional low/high and covariates
        names: Covariate names, censored covariate first (default: mrd, x1, ...)
        conf_level: Wald interval level (default: 0.95)

    Returns:
        Dictionary containing coefficients (beta rows with hazard-scale tests),
        partial_loglik, converged and warnings.
    """
    data = impute_at_bound(_observations(observations))
    fit = await asyncio.to_thread(fit_cox, data, _names(observations, names), conf_level)
    return fit.model_dump()


@mcp.tool(name="censcov__weibull_diag")
async def weibull_diag_tool(
    times: List[float], events: List[int], strata: Optional[List[str]] = None
) -> dict:
    """
    Kaplan-Meier curves and the log(-log S) versus log t Weibull diagnostic.

    Straight lines support a Weibull model; the slope estimates gamma and the
    intercept log lambda. Parallel lines across strata support proportional hazards.

    Args:
        times: Follow-up times (> 0)
        events: Event indicators (1 = event)
        strata: Optional stratum label per observation

    Returns:
        Dictionary containing km (curves per stratum), diagnostic (points,
        slope and intercept per stratum) and warnings for skipped strata.
    """
    curves = kaplan_meier(times, events, strata)
    skipped: List[str] = []
    series = weibull_diag(times, events, strata, warnings=skipped)
    return {
        "km": [c.model_dump() for c in curves],
        "diagnostic": [s.model_dump() for s in series],
        "warnings": skipped,
    }


@mcp.tool(name="censcov__simulate_trial")
async def simulate_trial(
    seed: int = 20150315,
    replication: int = 0,
    n_per_arm: int = 200,
    beta_tmt: float = 0.0,
    beta_mrd: float = 0.7,
) -> dict:
    """
    Simulates one two-arm trial of the reference configuration.

    MRD is Normal per arm and left-censored at the arm's detection limit;
    PFS is Weibull PH censored at the endpoint horizon. Output rows can be fed
    straight into censcov__fit_censcov.

    Args:
        seed: Root seed (default: 20150315)
        replication: Replication index; the stream is (seed, replication)
        n_per_arm: Patients per arm (default: 200)
        beta_tmt: True treatment coefficient (default: 0)
        beta_mrd: True MRD coefficient (default: 0.7)

    Returns:
        Dictionary containing config and observations (time, event, low, high,
        covariates=[tmt]).
    """
    cfg = SimConfig(seed=seed, n_per_arm=n_per_arm, beta_tmt=beta_tmt, beta_mrd=beta_mrd)
    data = generate_trial(cfg, np.random.default_rng([cfg.seed, replication]))
    rows = [
        ObservationRecord(
            time=obs.time,
            event=obs.event,
            low=obs.x_cens.low if obs.x_cens is not None else None,
            high=obs.x_cens.high if obs.x_cens is not None else None,
            covariates=list(obs.x_exact),
        )
        for obs in data
    ]
    return {
        "config": cfg.model_dump(by_alias=True),
        "observations": [r.model_dump() for r in rows],
    }


# ============================================================================
# RESOURCES
# ============================================================================


@mcp.resource("censcov://reference-config")
async def reference_config() -> str:
    """
    Provides the reference configuration of the simulation study.

    Covariate distributions per arm, detection-limit shares, true Weibull
    parameters, and an example `key = value` config file.

    Returns:
        JSON string with the reference trial configuration.
    """
    data_path = Path(__file__).parent / "data" / "reference-config.json"
    return data_path.read_text(encoding="utf-8")


@mcp.resource("censcov://interval2-format")
async def interval2_format() -> str:
    """
    Documents the two-column interval2 coding of censored values.

    Returns:
        JSON string with the coding cases, error conditions, a CSV example and
        the parameter names of each density family.
    """
    data_path = Path(__file__).parent / "data" / "interval2-format.json"
    return data_path.read_text(encoding="utf-8")


# ============================================================================
# PROMPTS
# ============================================================================


@mcp.prompt(name="censcov__lod-regression-workflow")
async def lod_regression_workflow(endpoint: str = "", covariate: str = "") -> str:
    """
    Generates the two-stage workflow for survival regression with a covariate
    subject to a limit of detection.

    Args:
        endpoint: Name of the time-to-event endpoint (e.g., 'PFS')
        covariate: Name of the censored covariate (e.g., 'MRD')

    Returns:
        Prompt template string guiding the covariate density estimate, the
        censored-covariate fit and the comparison with imputation.
    """
    endpoint_label = endpoint or "the endpoint"
    covariate_label = covariate or "the censored covariate"
    template = f"""You are helping analyse {endpoint_label} with {covariate_label} measured \
subject to a limit of detection. Follow this workflow:

**Step 1: Code the Data**
- Read the `censcov://interval2-format` resource
- Each row needs time, event (1 = event), the {covariate_label} bounds (low, high)
  and the exactly observed covariates (e.g. treatment)
- Values below the detection limit c are coded low = None, high = c

**Step 2: Check the Weibull Assumption**
- Use `censcov__weibull_diag` with the treatment as strata
- Straight, roughly parallel lines support a Weibull PH model

**Step 3: Estimate the Covariate Density**
- Use `censcov__fit_censored_sample` on the pooled {covariate_label} values
- Report mu and sigma (Normal) with their standard errors

**Step 4: Fit the Censored-Covariate Model**
- Use `censcov__fit_censcov` (it repeats Step 3 when density_params is omitted)
- Report lambda, gamma and each beta with CI and p-value, and the AIC
- exp(beta) is the hazard ratio per unit of the covariate

**Step 5: Compare with Imputation**
- Use `censcov__fit_weibull_reg` and `censcov__fit_cox`; both substitute the
  detection limit for censored values
- Differences in the {covariate_label} coefficient indicate substitution bias

**Related Resources**:
- `censcov://interval2-format`: Coding of censored values
- `censcov://reference-config`: Simulation setup showing the size of substitution bias
"""
    return template


# ============================================================================
# SERVER ENTRY POINT
# ============================================================================


def main() -> None:
    mcp.run()


if __name__ == "__main__":
    main()
