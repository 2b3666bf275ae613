"""Command-line front end.

Every subcommand reads a CSV (or a config file), runs one estimator and prints
either an aligned text report or a JSON envelope. Exit codes: 0 success,
1 usage, input or validation error, 2 fit failure or non-convergence.
"""

import argparse
import contextlib
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, NamedTuple, NoReturn, Optional, Sequence, Tuple

import structlog
from pydantic import BaseModel, ValidationError

from . import __version__
from .censcov_reg import fit_censcov, impute_at_bound
from .coxph import fit_cox
from .diagnostics import diag_to_csv, diag_to_svg, kaplan_meier, weibull_diag
from .errors import (
    CensCovError,
    DomainError,
    IngestError,
    NonIdentifiableError,
    OptimizationError,
    UsageError,
)
from .helpers import (
    format_censcov_report,
    format_coefficient_table,
    format_cox_report,
    format_diag_report,
    format_km_table,
    format_meandiff_report,
    format_onesample_report,
    format_sim_report,
    format_weibull_reg_report,
)
from .ingest import (
    censored_column,
    exact_column,
    ingest_csv,
    observations,
    survival_schema,
)
from .models import (
    CensCovSettings,
    CensoredValue,
    ColumnKind,
    ColumnSpec,
    CovariateDensity,
    Dataset,
    DensityFamily,
    ReportEnvelope,
    SimConfig,
    SurvObservation,
    WeibullAFT,
)
from .onesample import density_from_fit, fit_censored_sample
from .simulate import estimates_frame, load_sim_config, run_study
from .twosample import normal_mean_diff
from .weibull_reg import convert_aft, weibull_reg

logger = structlog.get_logger()

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FIT = 2


class CommandResult(NamedTuple):
    exit_code: int
    output: str
    error: str = ""


class _Outcome(NamedTuple):
    payload: Dict[str, Any]
    text: str
    warnings: List[str]
    digest: Optional[str]
    ok: bool


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting on bad input."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# ============================================================================
# ARGUMENT PARSING
# ============================================================================


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from None


def _name_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _common_options() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=["table", "json"], default="table")
    common.add_argument("--seed", type=int, default=None, help="RNG seed where randomness exists")
    common.add_argument("--conf-level", type=float, default=0.95, help="Wald interval level")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings only")
    return common


def _survival_options(parser: argparse.ArgumentParser, cens_required: bool) -> None:
    parser.add_argument("--data", required=True, help="CSV file with a header row")
    parser.add_argument("--time", required=True, help="Follow-up time column")
    parser.add_argument("--event", required=True, help="Event indicator column (1 = event)")
    parser.add_argument(
        "--covars", type=_name_list, default=[], help="Exactly observed covariates, comma-separated"
    )
    parser.add_argument("--cens-low", required=cens_required, help="Censored covariate, low bound")
    parser.add_argument("--cens-high", required=cens_required, help="Censored covariate, up bound")
    parser.add_argument("--cens-name", default=None, help="Report name of the censored covariate")


def _sample_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True)
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--column", default=None, help="Fully observed column")
    source.add_argument("--low", default=None, help="interval2 lower bound column")
    parser.add_argument("--high", default=None, help="interval2 upper bound column")


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = _Parser(
        prog="censcov",
        description="Weibull survival regression with an interval-censored covariate.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("censcov", parents=[common], help="Fit the censored-covariate regression")
    _survival_options(p, cens_required=True)
    density = p.add_mutually_exclusive_group()
    density.add_argument(
        "--density-from",
        choices=["pooled"],
        default="pooled",
        help="Estimate the covariate density from the pooled censored sample",
    )
    density.add_argument("--density", default=None, help="Fixed density, e.g. normal:-2.5,1.7")
    p.add_argument(
        "--density-family",
        choices=[f.value for f in DensityFamily],
        default=DensityFamily.NORMAL.value,
        help="Family of the pooled density estimate",
    )
    p.add_argument("--initial", type=_float_list, default=None, help="lambda,gamma,beta...")

    for name, help_text in (
        ("weibullreg", "Weibull regression with PH conversion"),
        ("cox", "Cox regression"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        _survival_options(p, cens_required=False)

    p = sub.add_parser("onesample", parents=[common], help="Fit one censored sample")
    _sample_options(p)
    p.add_argument(
        "--family", choices=[f.value for f in DensityFamily], default=DensityFamily.NORMAL.value
    )

    p = sub.add_parser("meandiff", parents=[common], help="Difference of two censored means")
    _sample_options(p)
    p.add_argument("--group", required=True, help="Column separating the two samples")
    p.add_argument("--levels", type=_name_list, default=None, help="Two group labels, first,second")

    p = sub.add_parser("diag", parents=[common], help="Kaplan-Meier and Weibull diagnostic")
    p.add_argument("--data", required=True)
    p.add_argument("--time", required=True)
    p.add_argument("--event", required=True)
    p.add_argument("--strata", default=None, help="Stratum column")
    p.add_argument("--levels", type=_name_list, default=None, help="Strata to report, in order")
    p.add_argument("--csv-out", default=None, help="Write the diagnostic points as CSV")
    p.add_argument("--svg-out", default=None, help="Write the diagnostic plot as SVG")

    p = sub.add_parser("convert", parents=[common], help="AFT to PH parameters")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--log-sigma", type=float, required=True)
    p.add_argument("--alpha", type=float, nargs="*", default=[])
    p.add_argument("--names", type=_name_list, default=None)
    p.add_argument(
        "--covariance", default=None, help="JSON file with the AFT covariance matrix"
    )

    p = sub.add_parser("simulate", parents=[common], help="Run the simulation study")
    p.add_argument("--config", default=None, help="key = value file of SimConfig fields")
    p.add_argument("--replications", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--estimates-out", default=None, help="Per-replication estimates as CSV")
    return parser


# ============================================================================
# SUBCOMMANDS
# ============================================================================


def _dump(model: BaseModel) -> Dict[str, Any]:
    return model.model_dump(by_alias=True)


def _cens_pair(args: argparse.Namespace) -> Optional[Tuple[str, str]]:
    if (args.cens_low is None) != (args.cens_high is None):
        raise UsageError("--cens-low and --cens-high must be given together")
    if args.cens_low is None:
        return None
    return args.cens_low, args.cens_high


def _covariate_names(args: argparse.Namespace, cens: Optional[Tuple[str, str]]) -> List[str]:
    names = list(args.covars)
    if cens is not None:
        names.insert(0, args.cens_name or cens[0].split(".")[0])
    return names


def _survival_data(
    args: argparse.Namespace,
) -> Tuple[Dataset, List[SurvObservation], List[str], bool]:
    cens = _cens_pair(args)
    schema = survival_schema(
        args.time, args.event, args.covars, *(cens if cens is not None else (None, None))
    )
    dataset = ingest_csv(args.data, schema)
    data = observations(dataset, args.time, args.event, args.covars, cens)
    return dataset, data, _covariate_names(args, cens), cens is not None


def _parse_density(text: str) -> CovariateDensity:
    family, sep, params = text.partition(":")
    try:
        values = _float_list(params)
        if not sep or len(values) != 2:
            raise ValueError
        return CovariateDensity(family=DensityFamily(family.strip()), params=(values[0], values[1]))
    except (ValueError, argparse.ArgumentTypeError):
        raise UsageError(f"--density expects family:P1,P2, got {text!r}") from None


def _run_censcov(args: argparse.Namespace) -> _Outcome:
    dataset, data, names, _ = _survival_data(args)
    stage_warnings: List[str] = []
    if args.density is not None:
        density = _parse_density(args.density)
    else:
        pooled = [obs.x_cens for obs in data if obs.x_cens is not None]
        first_stage = fit_censored_sample(
            pooled, DensityFamily(args.density_family), args.conf_level
        )
        if not first_stage.converged:
            stage_warnings.append("covariate density fit did not converge")
        density = density_from_fit(first_stage)
        logger.info("density_estimated", family=density.family.value, params=density.params)

    fit = fit_censcov(
        data,
        density,
        initial=args.initial,
        settings=CensCovSettings(conf_level=args.conf_level),
        names=names,
    )
    return _Outcome(
        payload={"density": _dump(density), "fit": _dump(fit)},
        text=format_censcov_report(fit),
        warnings=stage_warnings + fit.warnings,
        digest=dataset.digest,
        ok=fit.converged,
    )


def _run_weibullreg(args: argparse.Namespace) -> _Outcome:
    dataset, data, names, has_cens = _survival_data(args)
    if has_cens:
        data = impute_at_bound(data)
    report = weibull_reg(data, names, args.conf_level)
    return _Outcome(
        payload=_dump(report),
        text=format_weibull_reg_report(report),
        warnings=list(report.aft.warnings),
        digest=dataset.digest,
        ok=report.aft.converged,
    )


def _run_cox(args: argparse.Namespace) -> _Outcome:
    dataset, data, names, has_cens = _survival_data(args)
    if has_cens:
        data = impute_at_bound(data)
    fit = fit_cox(data, names, args.conf_level)
    return _Outcome(
        payload=_dump(fit),
        text=format_cox_report(fit),
        warnings=list(fit.warnings),
        digest=dataset.digest,
        ok=fit.converged,
    )


def _sample_schema(args: argparse.Namespace) -> List[ColumnSpec]:
    if args.column is not None:
        return [ColumnSpec(name=args.column, kind=ColumnKind.NUMERIC_OR_NA)]
    if args.high is None:
        raise UsageError("--low requires --high")
    return [
        ColumnSpec(name=args.low, kind=ColumnKind.NUMERIC_OR_NA),
        ColumnSpec(name=args.high, kind=ColumnKind.NUMERIC_OR_NA),
    ]


def _sample_values(args: argparse.Namespace, dataset: Dataset) -> List[CensoredValue]:
    if args.column is not None:
        return exact_column(dataset, args.column)
    return censored_column(dataset, args.low, args.high)


def _run_onesample(args: argparse.Namespace) -> _Outcome:
    dataset = ingest_csv(args.data, _sample_schema(args))
    fit = fit_censored_sample(
        _sample_values(args, dataset), DensityFamily(args.family), args.conf_level
    )
    return _Outcome(
        payload=_dump(fit),
        text=format_onesample_report(fit),
        warnings=[] if fit.covariance_available else ["no standard errors"],
        digest=dataset.digest,
        ok=fit.converged,
    )


def _run_meandiff(args: argparse.Namespace) -> _Outcome:
    dataset = ingest_csv(args.data, _sample_schema(args))
    if args.group not in dataset.columns:
        raise IngestError([f"missing column {args.group!r}"])
    labels = [token.strip() for token in dataset.raw[args.group]]
    levels = args.levels or sorted(set(labels))
    if len(levels) != 2:
        raise UsageError(f"--group must separate exactly two samples, found {levels}")
    values = _sample_values(args, dataset)
    if len(values) != len(labels):
        raise IngestError([f"column {args.column!r} has missing values"])
    samples = [[v for v, label in zip(values, labels) if label == level] for level in levels]
    fit = normal_mean_diff(samples[0], samples[1], args.conf_level)
    return _Outcome(
        payload={"levels": levels, **_dump(fit)},
        text=f"{levels[0]} - {levels[1]}\n{format_meandiff_report(fit)}",
        warnings=[],
        digest=dataset.digest,
        ok=True,
    )


def _run_diag(args: argparse.Namespace) -> _Outcome:
    schema = survival_schema(args.time, args.event)
    dataset = ingest_csv(args.data, schema)
    strata = None
    if args.strata is not None:
        if args.strata not in dataset.columns:
            raise IngestError([f"missing column {args.strata!r}"])
        strata = [token.strip() for token in dataset.raw[args.strata]]
    times = dataset.column(args.time)
    events = dataset.column(args.event)
    curves = kaplan_meier(times, events, strata, args.levels)
    skipped: List[str] = []
    series = weibull_diag(times, events, strata, args.levels, skipped)
    if args.csv_out:
        diag_to_csv(series, args.csv_out)
    if args.svg_out:
        diag_to_svg(series, args.svg_out)
    return _Outcome(
        payload={"km": [_dump(c) for c in curves], "diagnostic": [_dump(s) for s in series]},
        text=f"{format_km_table(curves)}\n\n{format_diag_report(series)}",
        warnings=skipped,
        digest=dataset.digest,
        ok=True,
    )


def _run_convert(args: argparse.Namespace) -> _Outcome:
    covariance = None
    if args.covariance is not None:
        try:
            covariance = json.loads(Path(args.covariance).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise IngestError([f"cannot read covariance {args.covariance}: {e}"]) from e
    params = WeibullAFT(mu=args.mu, log_sigma=args.log_sigma, alpha=tuple(args.alpha))
    summary = convert_aft(params, covariance, args.names, args.conf_level)
    rows = [summary.lambda_, summary.gamma, *summary.beta]
    text = format_coefficient_table(rows, "PH parametrization:")
    if summary.hazard_ratios:
        text += "\n\n" + format_coefficient_table(summary.hazard_ratios, "Hazard ratios:")
    return _Outcome(payload=_dump(summary), text=text, warnings=[], digest=None, ok=True)


def _run_simulate(args: argparse.Namespace) -> _Outcome:
    overrides: Dict[str, object] = {}
    for key in ("seed", "replications", "workers"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.config is not None:
        cfg = load_sim_config(args.config, overrides)
    else:
        cfg = SimConfig.model_validate(overrides)
    report = run_study(cfg)
    if args.estimates_out:
        estimates_frame(report).to_csv(args.estimates_out, index=False, float_format="%.17g")
    failed = sum(d.n_failed for d in report.methods)
    return _Outcome(
        payload=_dump(report),
        text=format_sim_report(report),
        warnings=[f"{failed} method fits failed"] if failed else [],
        digest=None,
        ok=True,
    )


_COMMANDS: Dict[str, Callable[[argparse.Namespace], _Outcome]] = {
    "censcov": _run_censcov,
    "weibullreg": _run_weibullreg,
    "cox": _run_cox,
    "onesample": _run_onesample,
    "meandiff": _run_meandiff,
    "diag": _run_diag,
    "convert": _run_convert,
    "simulate": _run_simulate,
}


# ============================================================================
# ENTRY POINTS
# ============================================================================


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    """Console-rendered structlog output on stderr."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    structlog.configure(
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.dev.ConsoleRenderer(colors=False),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )


def _render(args: argparse.Namespace, argv: Sequence[str], outcome: _Outcome) -> str:
    if args.format == "table":
        text = outcome.text
        if not outcome.ok:
            text += "\nWARNING: fit did not converge"
        return text
    envelope = ReportEnvelope(
        command=args.command,
        argv=list(argv),
        input_digest=outcome.digest,
        payload=outcome.payload,
        warnings=outcome.warnings,
        version=__version__,
    )
    return envelope.model_dump_json(indent=2)


def run_subcommand(argv: Sequence[str]) -> CommandResult:
    """
    Parse argv, run the subcommand and render its report.

    Args:
        argv: Arguments without the program name

    Returns:
        CommandResult with the exit code, the report text and an error message
    """
    parser = build_parser()
    captured = io.StringIO()
    try:
        with contextlib.redirect_stdout(captured):
            args = parser.parse_args(list(argv))
    except UsageError as e:
        return CommandResult(EXIT_USAGE, "", str(e))
    except SystemExit as e:
        # --help and --version
        code = EXIT_OK if e.code in (0, None) else EXIT_USAGE
        return CommandResult(code, captured.getvalue())

    configure_logging(args.verbose, args.quiet)
    log = logger.bind(component="cli", command=args.command)
    try:
        outcome = _COMMANDS[args.command](args)
    except (NonIdentifiableError, OptimizationError, DomainError) as e:
        log.error("fit_failed", error=str(e))
        return CommandResult(EXIT_FIT, "", f"fit failed: {e}")
    except UsageError as e:
        return CommandResult(EXIT_USAGE, "", f"{parser.format_usage()}{e}")
    except IngestError as e:
        return CommandResult(EXIT_USAGE, "", "\n".join(e.messages))
    except (ValidationError, CensCovError, ValueError, OSError) as e:
        log.error("invalid_input", error=str(e))
        return CommandResult(EXIT_USAGE, "", str(e))

    if not outcome.ok:
        log.warning("fit_not_converged")
    return CommandResult(EXIT_OK if outcome.ok else EXIT_FIT, _render(args, argv, outcome))


def main() -> None:
    result = run_subcommand(sys.argv[1:])
    if result.output:
        print(result.output)
    if result.error:
        print(result.error, file=sys.stderr)
    sys.exit(result.exit_code)


if __name__ == "__main__":
    main()
