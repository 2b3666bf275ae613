"""Helper functions for formatting fit reports as aligned text."""

import math
from typing import List, Optional, Sequence

from .models import (
    CensCovFit,
    CoefficientRow,
    CoxFit,
    DiagSeries,
    KMCurve,
    MeanDiffFit,
    OneSampleFit,
    SimMethod,
    SimReport,
    WeibullRegReport,
)

P_VALUE_FLOOR = 2e-16
COEFFICIENT_HEADER = ("", "Estimate", "Std. Error", "CI.low", "CI.up", "p-value")


def format_number(value: Optional[float], digits: int = 5) -> str:
    """
    Format a number with a fixed count of significant digits.

    Args:
        value: Number to format; None prints as NA
        digits: Significant digits

    Returns:
        Formatted string (e.g., "0.74595", "-2.467", "Inf")
    """
    if value is None or math.isnan(value):
        return "NA"
    if math.isinf(value):
        return "Inf" if value > 0 else "-Inf"
    return f"{value:.{digits}g}"


def format_p_value(p: Optional[float]) -> str:
    """
    Format a p-value the way R prints coefficient tables.

    Args:
        p: Two-sided p-value, or None when not reported

    Returns:
        "<2e-16" below the floor, "NA" when missing, else 4 significant digits
    """
    if p is None or math.isnan(p):
        return "NA"
    if p < P_VALUE_FLOOR:
        return "<2e-16"
    return f"{p:.4g}"


def _align(table: Sequence[Sequence[str]]) -> List[str]:
    widths = [max(len(row[i]) for row in table) for i in range(len(table[0]))]
    lines = []
    for row in table:
        first = row[0].ljust(widths[0])
        rest = [cell.rjust(width) for cell, width in zip(row[1:], widths[1:])]
        lines.append("  ".join([first, *rest]).rstrip())
    return lines


def format_coefficient_table(rows: Sequence[CoefficientRow], title: str = "Coefficients:") -> str:
    """
    Format coefficient rows as Estimate / Std. Error / CI.low / CI.up / p-value.

    Args:
        rows: Coefficient rows
        title: Line printed above the table

    Returns:
        Multi-line aligned table
    """
    table = [list(COEFFICIENT_HEADER)]
    for row in rows:
        table.append(
            [
                row.name,
                format_number(row.estimate),
                format_number(row.std_error),
                format_number(row.ci_low),
                format_number(row.ci_high),
                format_p_value(row.p_value),
            ]
        )
    return "\n".join([title, *_align(table)])


def format_censcov_report(fit: CensCovFit) -> str:
    """
    Format a censored-covariate fit: coefficient table, then the AIC line.

    Args:
        fit: Fitted model

    Returns:
        Report text
    """
    lines = [format_coefficient_table(fit.coefficients), "", f"AIC: {fit.aic:.1f}"]
    lines.append(f"n = {fit.n}, events = {fit.n_events}, censored covariate = {fit.n_cens_cov}")
    if not fit.converged:
        lines.append("WARNING: optimizer did not converge")
    lines.extend(f"note: {w}" for w in fit.warnings)
    return "\n".join(lines)


def format_onesample_report(fit: OneSampleFit) -> str:
    counts = (
        f"n = {fit.n} (exact {fit.n_exact}, left {fit.n_left}, "
        f"right {fit.n_right}, interval {fit.n_interval})"
    )
    return "\n".join(
        [
            f"Censored sample, {fit.family.value} family",
            format_coefficient_table(fit.coefficients),
            "",
            f"log-likelihood: {format_number(fit.loglik, 8)}",
            counts,
        ]
    )


def format_meandiff_report(fit: MeanDiffFit) -> str:
    return "\n".join(
        [
            "Difference of means, unequal variances",
            format_coefficient_table(fit.rows),
        ]
    )


def format_weibull_reg_report(report: WeibullRegReport) -> str:
    """
    Format the AFT fit and its PH conversion one after the other.

    Args:
        report: Weibull regression report

    Returns:
        Report text with AFT, PH, hazard-ratio and event-time-ratio blocks
    """
    ph = report.ph
    blocks = [
        format_coefficient_table(report.aft_coefficients, "AFT coefficients:"),
        f"log-likelihood: {format_number(report.aft.loglik, 8)}",
        "",
        format_coefficient_table([ph.lambda_, ph.gamma, *ph.beta], "PH parametrization:"),
    ]
    if ph.hazard_ratios:
        blocks += ["", format_coefficient_table(ph.hazard_ratios, "Hazard ratios:")]
        blocks += ["", format_coefficient_table(ph.event_time_ratios, "Event time ratios:")]
    if not ph.inference_available:
        blocks.append("note: covariance unavailable; estimates only")
    blocks.extend(f"note: {w}" for w in report.aft.warnings)
    return "\n".join(blocks)


def format_cox_report(fit: CoxFit) -> str:
    lines = [
        format_coefficient_table(fit.coefficients),
        "",
        f"partial log-likelihood: {format_number(fit.partial_loglik, 8)}",
        f"iterations: {fit.iterations}, max |score|: {fit.max_abs_score:.2e}",
    ]
    lines.extend(f"note: {w}" for w in fit.warnings)
    return "\n".join(lines)


def format_km_table(curves: Sequence[KMCurve]) -> str:
    table = [["stratum", "time", "n.risk", "n.event", "survival"]]
    for curve in curves:
        for t, s, r, d in zip(curve.event_times, curve.survival, curve.at_risk, curve.events):
            table.append([curve.stratum, format_number(t), str(r), str(d), format_number(s)])
    return "\n".join(_align(table))


def format_diag_report(series: Sequence[DiagSeries]) -> str:
    """
    Format the per-stratum lines of the Weibull diagnostic.

    Args:
        series: Diagnostic series

    Returns:
        Table of slope (gamma), intercept (log lambda) and the implied lambda
    """
    table = [["stratum", "points", "slope (gamma)", "intercept (log lambda)", "lambda"]]
    for s in series:
        table.append(
            [
                s.stratum,
                str(len(s.log_time)),
                format_number(s.slope),
                format_number(s.intercept),
                format_number(math.exp(s.intercept)),
            ]
        )
    return "\n".join(_align(table))


_METHOD_LABELS = {
    SimMethod.CENSCOV: "censored covariate",
    SimMethod.WEIBULL_LOD: "Weibull, LOD imputed",
    SimMethod.COX_LOD: "Cox, LOD imputed",
}


def _study_table(report: SimReport, field: str, relative: str) -> List[str]:
    parameters = ["lambda", "gamma", "beta_tmt", "beta_mrd"]
    table = [["method", *parameters]]
    for method in SimMethod:
        row = [_METHOD_LABELS[method]]
        for parameter in parameters:
            try:
                summary = report.summary(method, parameter)
            except KeyError:
                row.append("")
                continue
            cell = format_number(getattr(summary, field), 4)
            factor = getattr(summary, relative)
            if factor is not None:
                cell += f" ({factor:.1f}x)"
            row.append(cell)
        table.append(row)
    return _align(table)


def format_sim_report(report: SimReport) -> str:
    """
    Format a simulation study as bias and MSE tables plus type-I error rates.

    Factors in parentheses compare an imputation method with the
    censored-covariate method (|bias| ratio and MSE ratio).

    Args:
        report: Simulation report

    Returns:
        Report text
    """
    cfg = report.config
    lines = [
        f"Replications: {cfg.replications}, n per arm: {cfg.n_per_arm}, seed: {cfg.seed}",
        (
            f"Mean censored covariate share: arm R {report.mean_cens_fraction_r:.3f}, "
            f"arm O {report.mean_cens_fraction_o:.3f}; "
            f"censored endpoints {report.mean_endpoint_censored:.3f}"
        ),
        "",
        "Bias:",
        *_study_table(report, "bias", "relative_bias"),
        "",
        "Mean-squared error:",
        *_study_table(report, "mse", "relative_mse"),
        "",
        f"Rejection rate of H0: beta_tmt = 0 at alpha = {cfg.alpha}:",
    ]
    table = [["method", "rejection", "converged", "failed"]]
    for d in report.methods:
        rate = "NA" if d.rejection_rate_tmt is None else f"{d.rejection_rate_tmt:.3f}"
        table.append([_METHOD_LABELS[d.method], rate, str(d.n_converged), str(d.n_failed)])
    lines.extend(_align(table))
    return "\n".join(lines)
