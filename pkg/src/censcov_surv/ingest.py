"""CSV ingestion with typed columns and the interval2 censoring convention.

Cells are read as text; `NA` and empty cells are missing. Row numbers in
messages are file line numbers (the header is line 1).
"""

import hashlib
import io
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd
import structlog

from .censlik import MISSING_TOKENS, parse_interval2
from .errors import CensoringParseError, IngestError
from .models import CensoredValue, ColumnKind, ColumnSpec, Dataset, SurvObservation

logger = structlog.get_logger()

_FIRST_DATA_LINE = 2


def _parse_cell(token: str, kind: ColumnKind) -> Optional[float]:
    """Typed value of one cell; raises ValueError with a reason."""
    text = token.strip()
    if text in MISSING_TOKENS:
        if kind is ColumnKind.NUMERIC_OR_NA:
            return None
        raise ValueError("missing value")
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"{token!r} is not a number") from None
    if not math.isfinite(value):
        raise ValueError(f"{token!r} is not finite")
    if kind is ColumnKind.BINARY and value not in (0.0, 1.0):
        raise ValueError(f"{token!r} is not 0 or 1")
    if kind is ColumnKind.POSITIVE and not value > 0:
        raise ValueError(f"{token!r} must be > 0")
    return value


def parse_csv_bytes(content: bytes, schema: Sequence[ColumnSpec]) -> Dataset:
    """Parse CSV content against a schema; see `ingest_csv`."""
    try:
        frame = pd.read_csv(
            io.BytesIO(content), dtype=str, keep_default_na=False, skip_blank_lines=True
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise IngestError([f"malformed CSV header or body: {e}"]) from e

    columns = [str(c).strip() for c in frame.columns]
    frame.columns = pd.Index(columns)
    missing = [col.name for col in schema if col.name not in columns]
    if missing:
        raise IngestError([f"missing column {name!r}" for name in missing])

    raw: Dict[str, List[str]] = {c: frame[c].tolist() for c in columns}
    values: Dict[str, List[Optional[float]]] = {}
    problems: List[str] = []
    for col in schema:
        parsed: List[Optional[float]] = []
        for i, token in enumerate(raw[col.name]):
            try:
                parsed.append(_parse_cell(token, col.kind))
            except ValueError as e:
                problems.append(f"row {i + _FIRST_DATA_LINE}: column {col.name!r}: {e}")
                parsed.append(None)
        values[col.name] = parsed
    if problems:
        raise IngestError(problems)

    return Dataset(
        columns=columns,
        raw=raw,
        values=values,
        row_count=len(frame),
        digest=hashlib.sha256(content).hexdigest(),
    )


def ingest_csv(path: Union[str, Path], schema: Sequence[ColumnSpec]) -> Dataset:
    """Read a CSV file and type the declared columns.

    Args:
        path: File with a header row
        schema: Columns that must exist, with their declared kinds

    Returns:
        Dataset with raw tokens of every column and typed values of the
        declared ones

    Raises:
        IngestError: Malformed file, missing columns, or row-level problems
            (all of them, each with its line number)
    """
    try:
        content = Path(path).read_bytes()
    except OSError as e:
        raise IngestError([f"cannot read {path}: {e}"]) from e
    dataset = parse_csv_bytes(content, schema)
    logger.info("csv_ingested", path=str(path), rows=dataset.row_count, digest=dataset.digest[:12])
    return dataset


def dataset_to_csv(dataset: Dataset) -> str:
    """Re-serialize the raw tokens; `parse_csv_bytes` of the result is lossless."""
    buffer = io.StringIO()
    pd.DataFrame(dataset.raw, columns=dataset.columns).to_csv(buffer, index=False)
    return buffer.getvalue()


def censored_column(dataset: Dataset, low: str, high: str) -> List[CensoredValue]:
    """interval2 pairs of two columns as CensoredValue, with row-numbered errors."""
    out: List[CensoredValue] = []
    problems: List[str] = []
    for i, (lo, hi) in enumerate(zip(dataset.raw[low], dataset.raw[high])):
        try:
            out.append(parse_interval2(lo, hi, row=i + _FIRST_DATA_LINE))
        except CensoringParseError as e:
            problems.append(str(e))
    if problems:
        raise IngestError(problems)
    return out


def exact_column(dataset: Dataset, name: str) -> List[CensoredValue]:
    """A fully observed numeric column as exact CensoredValue entries."""
    return [CensoredValue.exact(float(v)) for v in dataset.column(name) if v is not None]


def survival_schema(
    time: str,
    event: str,
    covariates: Sequence[str] = (),
    cens_low: Optional[str] = None,
    cens_high: Optional[str] = None,
) -> List[ColumnSpec]:
    schema = [
        ColumnSpec(name=time, kind=ColumnKind.POSITIVE),
        ColumnSpec(name=event, kind=ColumnKind.BINARY),
    ]
    schema += [ColumnSpec(name=c, kind=ColumnKind.NUMERIC) for c in covariates]
    for bound in (cens_low, cens_high):
        if bound is not None:
            schema.append(ColumnSpec(name=bound, kind=ColumnKind.NUMERIC_OR_NA))
    return schema


def _required(dataset: Dataset, name: str, i: int) -> float:
    value = dataset.column(name)[i]
    if value is None:
        raise IngestError([f"row {i + _FIRST_DATA_LINE}: column {name!r}: missing value"])
    return value


def observations(
    dataset: Dataset,
    time: str,
    event: str,
    covariates: Sequence[str] = (),
    cens: Optional[Tuple[str, str]] = None,
) -> List[SurvObservation]:
    """Survival rows of a dataset ingested with `survival_schema`.

    Args:
        dataset: Parsed table
        time: Follow-up time column
        event: Event indicator column
        covariates: Fully observed covariate columns
        cens: (low, high) columns of the censored covariate in interval2 coding
    """
    x_cens: List[Optional[CensoredValue]]
    if cens is not None:
        x_cens = list(censored_column(dataset, *cens))
    else:
        x_cens = [None] * dataset.row_count
    return [
        SurvObservation(
            time=_required(dataset, time, i),
            event=int(_required(dataset, event, i)),
            x_exact=tuple(_required(dataset, c, i) for c in covariates),
            x_cens=x_cens[i],
        )
        for i in range(dataset.row_count)
    ]
