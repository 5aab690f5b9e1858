from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence
import csv
import io
import logging

import numpy as np

from ..domain.errors import EmptyAggregate
from ..domain.models import CheckpointRecord, Config, ExperimentReport

logger = logging.getLogger(__name__)

SUMMARY_HEADER = ("method", "checkpoint", "run", "final_mean", "true_value", "trials_used")
AGGREGATE_HEADER = (
    "method", "checkpoint", "runs", "mean", "median", "q1", "q3", "min", "max",
    "true_median", "regret_median", "mean_optimism_gap",
)


@dataclass(frozen=True)
class SummaryRow:
    method: str
    checkpoint: float
    run: int
    final_mean: float
    true_value: Optional[float]
    trials_used: int


@dataclass(frozen=True)
class AggregateRow:
    """Distribution of final means across HPO runs for one (method, checkpoint)."""
    method: str
    checkpoint: float
    runs: int
    mean: float
    median: float
    q1: float
    q3: float
    min: float
    max: float
    true_median: Optional[float] = None
    regret_median: Optional[float] = None
    mean_optimism_gap: Optional[float] = None


def nearest_rank(values: Sequence[float], percent: float) -> float:
    """Nearest-rank percentile: the smallest value with at least `percent`% of data at or below it."""
    if len(values) == 0:
        raise EmptyAggregate("percentile of no values")
    return float(np.percentile(np.asarray(values, dtype=float), percent, method="inverted_cdf"))


def _ordered(records: Iterable[CheckpointRecord]) -> List[CheckpointRecord]:
    # methods keep the order they were run in; checkpoints and runs ascend
    records = list(records)
    first_seen: Dict[str, int] = {}
    for record in records:
        first_seen.setdefault(record.method, len(first_seen))
    return sorted(records, key=lambda r: (first_seen[r.method], r.checkpoint, r.run_index))


def summary_rows(report: ExperimentReport) -> List[SummaryRow]:
    return [
        SummaryRow(r.method, r.checkpoint, r.run_index, r.final_mean, r.true_value, r.trials_used)
        for r in _ordered(report.records)
    ]


def _median_or_none(values: List[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return nearest_rank(present, 50) if present else None


def summarize(report: ExperimentReport) -> List[AggregateRow]:
    """Per (method, checkpoint) statistics of the final means across runs."""
    if not report.records:
        raise EmptyAggregate("report holds no checkpoint records")
    groups: Dict[tuple, List[CheckpointRecord]] = {}
    for record in _ordered(report.records):
        groups.setdefault((record.method, record.checkpoint), []).append(record)

    rows = []
    for (method, checkpoint), records in groups.items():
        finals = np.array([r.final_mean for r in records], dtype=float)
        gaps = [r.optimism_gap for r in records if r.optimism_gap is not None]
        rows.append(AggregateRow(
            method=method,
            checkpoint=checkpoint,
            runs=len(records),
            mean=float(finals.mean()),
            median=nearest_rank(finals, 50),
            q1=nearest_rank(finals, 25),
            q3=nearest_rank(finals, 75),
            min=float(finals.min()),
            max=float(finals.max()),
            true_median=_median_or_none([r.true_value for r in records]),
            regret_median=_median_or_none([r.regret for r in records]),
            mean_optimism_gap=float(np.mean(gaps)) if gaps else None,
        ))
    return rows


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def summary_csv(rows: List[SummaryRow]) -> str:
    return _csv_text(SUMMARY_HEADER, (
        (r.method, r.checkpoint, r.run, r.final_mean, r.true_value, r.trials_used) for r in rows
    ))


def aggregate_csv(rows: List[AggregateRow]) -> str:
    return _csv_text(AGGREGATE_HEADER, (
        (r.method, r.checkpoint, r.runs, r.mean, r.median, r.q1, r.q3, r.min, r.max,
         r.true_median, r.regret_median, r.mean_optimism_gap) for r in rows
    ))


def _num(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.4g}"


def markdown_tables(rows: List[AggregateRow]) -> str:
    """One table per checkpoint with methods as rows."""
    checkpoints = sorted({r.checkpoint for r in rows})
    blocks = []
    for checkpoint in checkpoints:
        lines = [
            f"### Evaluations: {checkpoint:g}",
            "",
            "| method | runs | mean | median | q1 | q3 | min | max | regret (median) |",
            "|---|---:|---:|---:|---:|---:|---:|---:|---:|",
        ]
        for r in rows:
            if r.checkpoint != checkpoint:
                continue
            lines.append(
                f"| {r.method} | {r.runs} | {_num(r.mean)} | {_num(r.median)} | {_num(r.q1)} | "
                f"{_num(r.q3)} | {_num(r.min)} | {_num(r.max)} | {_num(r.regret_median)} |"
            )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def records_from_events(events: Iterable[Dict[str, Any]]) -> ExperimentReport:
    """Rebuild a report from raw results-log events."""
    report = ExperimentReport()
    for event in events:
        kind = event.get("event")
        if kind == "final_evaluation":
            report.records.append(CheckpointRecord(
                method=event["method"],
                run_index=int(event["run_index"]),
                checkpoint=float(event["checkpoint"]),
                config=Config(dict(event["config"])),
                final_mean=float(event["final_mean"]),
                true_value=event.get("true_value"),
                regret=event.get("regret"),
                best_observed=event.get("best_observed"),
                trials_used=int(event["trials_used"]),
                spent=float(event["spent"]),
            ))
        elif kind == "run_failed":
            report.failures.append({
                "method": event["method"],
                "run_index": event["run_index"],
                "error": event.get("error", ""),
            })
    logger.debug(f"Rebuilt {len(report.records)} checkpoint records and {len(report.failures)} failures")
    return report
