"""Kaplan-Meier curves and the Weibull log(-log S) versus log t diagnostic.

Under a Weibull PH model log(-log S(t)) = log lambda + gamma * log t, so per
stratum the points should fall on a line; parallel lines across strata
support proportional hazards.
"""

import io
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import structlog
from numpy.typing import ArrayLike

from .errors import DomainError
from .models import DiagSeries, KMCurve

logger = structlog.get_logger()

ALL_STRATA = "all"


def _strata_labels(n: int, strata: Optional[Sequence[object]]) -> List[str]:
    if strata is None:
        return [ALL_STRATA] * n
    if len(strata) != n:
        raise ValueError("strata must have one label per observation")
    return [str(s) for s in strata]


def _km_single(label: str, times: np.ndarray, events: np.ndarray) -> KMCurve:
    event_times = np.unique(times[events > 0])
    survival, at_risk, deaths = [], [], []
    s = 1.0
    for t in event_times:
        n_risk = int(np.sum(times >= t))
        d = int(np.sum((times == t) & (events > 0)))
        s *= 1.0 - d / n_risk
        survival.append(s)
        at_risk.append(n_risk)
        deaths.append(d)
    return KMCurve(
        stratum=label,
        n=int(times.size),
        event_times=tuple(float(t) for t in event_times),
        survival=tuple(survival),
        at_risk=tuple(at_risk),
        events=tuple(deaths),
    )


def kaplan_meier(
    times: ArrayLike,
    events: ArrayLike,
    strata: Optional[Sequence[object]] = None,
    levels: Optional[Sequence[str]] = None,
    warnings: Optional[List[str]] = None,
) -> List[KMCurve]:
    """Product-limit estimate per stratum.

    Subjects censored at an event time count as at risk at that time.

    Args:
        times: Follow-up times, all > 0
        events: 1 = event, 0 = censored
        strata: Optional label per observation
        levels: Strata to report, in order; defaults to the sorted labels.
            Levels without observations are skipped with a warning.
        warnings: Receives one message per skipped level

    Returns:
        One KMCurve per non-empty stratum

    Raises:
        DomainError: If any time is <= 0
    """
    t = np.asarray(times, dtype=float)
    e = np.asarray(events, dtype=float)
    if t.shape != e.shape:
        raise ValueError("times and events must have the same length")
    if np.any(~(t > 0)):
        raise DomainError("follow-up times must be > 0")
    labels = np.asarray(_strata_labels(t.size, strata))
    order = list(levels) if levels is not None else sorted(set(labels.tolist()))

    curves = []
    for level in order:
        mask = labels == level
        if not mask.any():
            logger.warning("empty_stratum_skipped", stratum=level)
            if warnings is not None:
                warnings.append(f"stratum {level!r} has no observations")
            continue
        curves.append(_km_single(level, t[mask], e[mask]))
    return curves


def _series(stratum: str, times: np.ndarray, survival: np.ndarray) -> Optional[DiagSeries]:
    usable = (survival > 0) & (survival < 1)
    if usable.sum() < 2:
        logger.warning("diagnostic_stratum_skipped", stratum=stratum, points=int(usable.sum()))
        return None
    x = np.log(times[usable])
    y = np.log(-np.log(survival[usable]))
    slope, intercept = np.polyfit(x, y, 1)
    return DiagSeries(
        stratum=stratum,
        log_time=tuple(x.tolist()),
        loglog_surv=tuple(y.tolist()),
        slope=float(slope),
        intercept=float(intercept),
    )


def diag_from_survival(
    times: ArrayLike, survival: ArrayLike, stratum: str = ALL_STRATA
) -> Optional[DiagSeries]:
    """Diagnostic series from given survival values (e.g. a fitted or exact curve).

    Returns None, with a warning, when fewer than 2 values lie strictly in (0, 1).
    """
    t = np.asarray(times, dtype=float)
    s = np.asarray(survival, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("times must be > 0")
    return _series(stratum, t, s)


def weibull_diag(
    times: ArrayLike,
    events: ArrayLike,
    strata: Optional[Sequence[object]] = None,
    levels: Optional[Sequence[str]] = None,
    warnings: Optional[List[str]] = None,
) -> List[DiagSeries]:
    """log(-log S_KM(t)) against log t per stratum, with a least-squares line.

    The slope estimates gamma and the intercept log lambda. Empty strata and
    strata with fewer than 2 usable points are skipped; each skip is logged
    and, when `warnings` is given, appended to it.
    """
    series = []
    for curve in kaplan_meier(times, events, strata, levels, warnings):
        item = _series(
            curve.stratum, np.asarray(curve.event_times), np.asarray(curve.survival)
        )
        if item is not None:
            series.append(item)
        elif warnings is not None:
            warnings.append(f"stratum {curve.stratum!r} has fewer than 2 usable points")
    return series


def diag_frame(series: Sequence[DiagSeries]) -> pd.DataFrame:
    """Long table with columns stratum, log_time, loglog_surv, fitted."""
    frames = [
        pd.DataFrame(
            {
                "stratum": s.stratum,
                "log_time": s.log_time,
                "loglog_surv": s.loglog_surv,
                "fitted": s.fitted,
            }
        )
        for s in series
    ]
    if not frames:
        return pd.DataFrame(columns=["stratum", "log_time", "loglog_surv", "fitted"])
    return pd.concat(frames, ignore_index=True)


def diag_to_csv(
    series: Sequence[DiagSeries], path: Optional[Union[str, Path]] = None
) -> str:
    """CSV text of the diagnostic points; also written to `path` when given."""
    buffer = io.StringIO()
    diag_frame(series).to_csv(buffer, index=False, float_format="%.17g")
    text = buffer.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def diag_to_svg(series: Sequence[DiagSeries], path: Union[str, Path]) -> Path:
    """Scatter of the diagnostic points with fitted lines, saved as SVG.

    Raises:
        ImportError: If matplotlib (the `plot` extra) is not installed
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for s in series:
        points = ax.plot(s.log_time, s.loglog_surv, "o", markersize=3, label=s.stratum)
        ax.plot(s.log_time, s.fitted, "-", color=points[0].get_color(), linewidth=1)
    ax.set_xlabel("log(time)")
    ax.set_ylabel("log(-log(S(t)))")
    if series:
        ax.legend(title="stratum")
    out = Path(path)
    fig.savefig(out, format="svg")
    plt.close(fig)
    return out
