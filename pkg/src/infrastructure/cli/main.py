from pathlib import Path
from typing import List, Optional
import argparse
import asyncio
import logging
import os
import sys

from dotenv import load_dotenv

from ...application.experiment_runner import ExperimentRunner
from ...application.summary import (
    aggregate_csv, markdown_tables, records_from_events, summarize, summary_csv, summary_rows,
)
from ...domain.errors import ConfigError, CorruptLog, EmptyAggregate
from ...domain.models import ExperimentReport
from ..config.schema import build_experiments, load_run_config
from ..storage.exports import write_metrics, write_text
from ..storage.results_log import ResultsLog, read_events
from ..worker.validation import validate_worker

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}

RESULTS_LOG = "results.jsonl"
SUMMARY_CSV = "summary.csv"
AGGREGATE_CSV = "aggregate.csv"
METRICS_FILE = "metrics.prom"


def configure_logging() -> None:
    """Diagnostics go to stderr at the level named by SEEDTUNE_LOG."""
    name = os.getenv("SEEDTUNE_LOG", "info").strip().lower()
    level = LOG_LEVELS.get(name, logging.INFO)
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )
    if name not in LOG_LEVELS:
        logger.warning(f"Unknown SEEDTUNE_LOG={name!r}, using info")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seedtune",
        description="Seed-noise-robust hyperparameter optimization benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run every method block of a configuration file")
    run.add_argument("--config", required=True, help="path to the JSON configuration")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="override master_seed")
    run.add_argument("--deterministic", action="store_true", default=None,
                     help="omit timestamps and evaluate one trial at a time")

    report = sub.add_parser("report", help="recompute the summary from a results log")
    report.add_argument("--in", dest="input", required=True, help="directory holding results.jsonl")
    report.add_argument("--format", choices=("csv", "markdown"), default="csv")

    validate = sub.add_parser("validate-worker", help="check an external worker against the protocol")
    validate.add_argument("--cmd", required=True, help="worker command line")
    validate.add_argument("--timeout", type=float, default=30.0, help="seconds per reply")
    return parser


async def _run_all(specs, log: ResultsLog) -> ExperimentReport:
    runner = ExperimentRunner(log)
    report = ExperimentReport()
    for spec in specs:
        report.extend(await runner.run_experiment(spec))
    return report


def run_cmd(args: argparse.Namespace) -> int:
    try:
        config = load_run_config(args.config)
        specs = build_experiments(config, seed=args.seed, deterministic=args.deterministic)
    except ConfigError as e:
        print(f"seedtune: {e}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(args.out)
    logger.info(f"Running {len(specs)} method(s) into {out}")
    with ResultsLog(out / RESULTS_LOG, deterministic=specs[0].deterministic) as log:
        report = asyncio.run(_run_all(specs, log))

    write_text(summary_csv(summary_rows(report)), out / SUMMARY_CSV)
    if report.records:
        aggregates = summarize(report)
        write_text(aggregate_csv(aggregates), out / AGGREGATE_CSV)
        write_metrics(report, aggregates, out / METRICS_FILE)
    if not report.succeeded:
        logger.error(f"{len(report.failures)} run(s) failed; see {out / RESULTS_LOG}")
        return EXIT_FAILED
    return EXIT_OK


def report_cmd(args: argparse.Namespace) -> int:
    path = Path(args.input) / RESULTS_LOG
    try:
        events = read_events(path)
    except OSError as e:
        print(f"seedtune: cannot read {path}: {e.strerror or e}", file=sys.stderr)
        return EXIT_CONFIG
    except CorruptLog as e:
        print(f"seedtune: corrupt results log: {e}", file=sys.stderr)
        return EXIT_CONFIG

    report = records_from_events(events)
    if not report.records:
        print(f"seedtune: no final evaluations in {path}", file=sys.stderr)
        return EXIT_CONFIG
    if args.format == "markdown":
        try:
            sys.stdout.write(markdown_tables(summarize(report)))
        except EmptyAggregate as e:
            print(f"seedtune: {e}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        sys.stdout.write(summary_csv(summary_rows(report)))
    return EXIT_OK


def validate_worker_cmd(args: argparse.Namespace) -> int:
    results = asyncio.run(validate_worker(args.cmd, timeout_s=args.timeout))
    for check in results:
        status = "PASS" if check.passed else "FAIL"
        print(f"{status} {check.name}: {check.detail}")
    return EXIT_OK if all(c.passed for c in results) else EXIT_FAILED


COMMANDS = {
    "run": run_cmd,
    "report": report_cmd,
    "validate-worker": validate_worker_cmd,
}


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 for --help
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except Exception as e:
        logger.error(f"Unexpected {type(e).__name__}: {e}", exc_info=logger.isEnabledFor(logging.DEBUG))
        return EXIT_FAILED


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
