import pytest

from src.application.summary import (
    AGGREGATE_HEADER, SUMMARY_HEADER, aggregate_csv, markdown_tables, nearest_rank, records_from_events,
    summarize, summary_csv, summary_rows,
)
from src.domain.errors import EmptyAggregate
from src.domain.models import CheckpointRecord, Config, ExperimentReport


def _record(method, run, final_mean, checkpoint=10.0, true_value=None, regret=None, best_observed=None):
    return CheckpointRecord(
        method=method, run_index=run, checkpoint=checkpoint, config=Config(values={"x": 0.5}),
        final_mean=final_mean, true_value=true_value, regret=regret, best_observed=best_observed,
        trials_used=7, spent=checkpoint,
    )


def test_nearest_rank_quartiles():
    """Test {1..5} has median 3 and quartiles 2 and 4"""
    values = [5.0, 1.0, 4.0, 2.0, 3.0]
    assert nearest_rank(values, 50) == 3.0
    assert nearest_rank(values, 25) == 2.0
    assert nearest_rank(values, 75) == 4.0


def test_nearest_rank_returns_a_data_value():
    """Test even-sized inputs pick an element rather than interpolating"""
    assert nearest_rank([1.0, 2.0, 3.0, 4.0], 50) == 2.0
    with pytest.raises(EmptyAggregate):
        nearest_rank([], 50)


def test_summarize_statistics():
    """Test aggregate rows carry mean, quartiles, extremes, true-value and regret medians"""
    report = ExperimentReport(records=[
        _record("random", run, value, true_value=value + 0.1, regret=0.5 - 0.1 * run, best_observed=value + 1.0)
        for run, value in enumerate([1.0, 2.0, 3.0, 4.0, 5.0])
    ])
    (row,) = summarize(report)
    assert (row.method, row.checkpoint, row.runs) == ("random", 10.0, 5)
    assert (row.mean, row.median, row.q1, row.q3, row.min, row.max) == (3.0, 3.0, 2.0, 4.0, 1.0, 5.0)
    assert row.true_median == pytest.approx(3.1)
    assert row.regret_median == pytest.approx(0.3)
    assert row.mean_optimism_gap == pytest.approx(-1.0)


def test_single_run_collapses_statistics():
    """Test one run gives identical mean, median, quartiles and extremes"""
    (row,) = summarize(ExperimentReport(records=[_record("asha", 0, 0.7)]))
    assert {row.mean, row.median, row.q1, row.q3, row.min, row.max} == {0.7}
    assert row.true_median is None and row.mean_optimism_gap is None


def test_empty_report_rejected():
    """Test summarizing no records raises EmptyAggregate"""
    with pytest.raises(EmptyAggregate):
        summarize(ExperimentReport())


def test_rows_grouped_in_run_order():
    """Test methods keep first-seen order while checkpoints and runs ascend"""
    report = ExperimentReport(records=[
        _record("bo_ei", 1, 0.1, checkpoint=20.0),
        _record("bo_ei", 0, 0.2, checkpoint=10.0),
        _record("random", 0, 0.3, checkpoint=10.0),
        _record("bo_ei", 0, 0.4, checkpoint=20.0),
    ])
    keys = [(r.method, r.checkpoint, r.run) for r in summary_rows(report)]
    assert keys == [("bo_ei", 10.0, 0), ("bo_ei", 20.0, 0), ("bo_ei", 20.0, 1), ("random", 10.0, 0)]
    assert [(r.method, r.checkpoint) for r in summarize(report)] == [
        ("bo_ei", 10.0), ("bo_ei", 20.0), ("random", 10.0),
    ]


def test_csv_rendering():
    """Test the CSV outputs start with their headers and leave missing values empty"""
    report = ExperimentReport(records=[_record("random", 0, 0.25, true_value=0.5)])
    lines = summary_csv(summary_rows(report)).splitlines()
    assert lines[0] == ",".join(SUMMARY_HEADER)
    assert lines[1] == "random,10.0,0,0.25,0.5,7"
    aggregate = aggregate_csv(summarize(report)).splitlines()
    assert aggregate[0] == ",".join(AGGREGATE_HEADER)
    assert aggregate[1].endswith(",0.5,,")


def test_markdown_tables():
    """Test one table per checkpoint with a row per method"""
    report = ExperimentReport(records=[
        _record("random", 0, 0.25, checkpoint=25.0),
        _record("bo_qnei", 0, 0.5, checkpoint=25.0, regret=0.01),
        _record("random", 0, 0.75, checkpoint=50.0),
    ])
    text = markdown_tables(summarize(report))
    assert "### Evaluations: 25" in text and "### Evaluations: 50" in text
    assert "| bo_qnei | 1 | 0.5 |" in text
    assert text.count("| random |") == 2


def test_records_from_events():
    """Test final-evaluation and run-failed events rebuild the report"""
    events = [
        {"event": "trial_started", "run_index": 0, "method": "random"},
        {"event": "final_evaluation", "run_index": 0, "method": "random", "checkpoint": 5,
         "config": {"x": 0.1}, "final_mean": -0.2, "true_value": -0.25, "regret": 0.25,
         "best_observed": -0.1, "trials_used": 5, "spent": 5.0},
        {"event": "run_failed", "run_index": 1, "method": "random", "error": "worker crashed"},
    ]
    report = records_from_events(events)
    (record,) = report.records
    assert (record.method, record.checkpoint, record.final_mean, record.trials_used) == ("random", 5.0, -0.2, 5)
    assert record.config == Config(values={"x": 0.1})
    assert record.optimism_gap == pytest.approx(-0.1)
    assert report.failures == [{"method": "random", "run_index": 1, "error": "worker crashed"}]
    assert not report.succeeded
