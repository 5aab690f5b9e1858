from typing import Callable, Dict, List, Optional, Tuple
import asyncio
import logging

import numpy as np

from ..domain.errors import BudgetExhausted, WorkerFailure
from ..domain.models import (
    BudgetAccount, CheckpointRecord, Config, ExperimentReport, ExperimentSpec, ParamSpace,
    ObjectiveSpec, TrialRecord, TrialStatus, stable_hash64,
)
from ..infrastructure.storage.results_log import ResultsLog
from ..objectives import create_objective
from ..optimizers.base import LedgerOptimizer
from ..optimizers.factory import create_optimizer
from ..ports.optimizer_port import ObjectivePort

logger = logging.getLogger(__name__)

_U64 = 2 ** 64
# optimization seeds are drawn below this, evaluation seeds at or above it
EVAL_SEED_OFFSET = 2 ** 63

ObjectiveFactory = Callable[[ObjectiveSpec, ParamSpace, int], ObjectivePort]


def _u64_bytes(value: int) -> bytes:
    return (int(value) % _U64).to_bytes(8, "little")


def run_seed(master_seed: int, run_index: int) -> int:
    """master_seed XOR a stable hash of the run index."""
    return (int(master_seed) ^ stable_hash64(b"run", _u64_bytes(run_index))) % _U64


def stream_seeds(seed: int) -> Tuple[int, int]:
    """Independent (optimizer, evaluation) seeds derived from one run seed."""
    base = _u64_bytes(seed)
    return stable_hash64(b"optimize", base), stable_hash64(b"evaluate", base)


def draw_eval_seeds(rng: np.random.Generator, count: int) -> List[int]:
    return [EVAL_SEED_OFFSET + int(s) for s in rng.integers(0, EVAL_SEED_OFFSET, size=count)]


async def final_evaluation(spec: ExperimentSpec, objective: ObjectivePort, config: Config,
                           rng: np.random.Generator) -> Tuple[float, Optional[float], List[int]]:
    """Mean loss of `config` at full budget over fresh evaluation seeds, plus its noise-free loss."""
    seeds = draw_eval_seeds(rng, spec.final_eval_seeds)
    losses = await asyncio.gather(*(objective.evaluate(config, seed, 1.0) for seed in seeds))
    return float(np.mean(losses)), objective.true_loss(config), seeds


def _reward(loss: Optional[float]) -> Optional[float]:
    return None if loss is None else -float(loss)


class ExperimentRunner:
    """Drives suggest/observe loops for every HPO run of an experiment and logs each event."""

    def __init__(self, results_log: Optional[ResultsLog] = None,
                 objective_factory: ObjectiveFactory = create_objective):
        self.log = results_log if results_log is not None else ResultsLog()
        self.objective_factory = objective_factory

    async def run_experiment(self, spec: ExperimentSpec) -> ExperimentReport:
        method = spec.method.label
        report = ExperimentReport()
        logger.info(f"[{method}] starting {spec.hpo_runs} HPO run(s), capacity {spec.capacity:g}")
        objective = self.objective_factory(spec.objective, spec.space, self._workers(spec))
        try:
            for run_index in range(spec.hpo_runs):
                records: List[CheckpointRecord] = []
                try:
                    await self.run_once(spec, run_index, objective, records)
                except Exception as e:
                    logger.error(f"[{method}] run {run_index} aborted: {type(e).__name__}: {e}")
                    diagnostics = getattr(e, "diagnostics", "")
                    self.log.emit("run_failed", run_index, method, error=str(e),
                                  error_type=type(e).__name__, diagnostics=diagnostics)
                    report.failures.append({"method": method, "run_index": run_index, "error": str(e)})
                # checkpoints taken before a failure stay in the report, as in the log
                report.records.extend(records)
        finally:
            await objective.close()
        logger.info(f"[{method}] finished: {len(report.records)} records, {len(report.failures)} failed run(s)")
        return report

    @staticmethod
    def _workers(spec: ExperimentSpec) -> int:
        # completion order is only reproducible with one trial in flight
        return 1 if spec.deterministic else spec.workers

    async def run_once(self, spec: ExperimentSpec, run_index: int, objective: ObjectivePort,
                       records: Optional[List[CheckpointRecord]] = None) -> List[CheckpointRecord]:
        """One HPO run; checkpoint records are appended to `records` as they are taken."""
        opt_seed, eval_seed = stream_seeds(run_seed(spec.master_seed, run_index))
        account = BudgetAccount.create(spec.capacity, list(spec.checkpoints))
        optimizer = create_optimizer(spec.method, spec.space, account, opt_seed,
                                     spec.surrogate, spec.acquisition)
        eval_rng = np.random.default_rng(eval_seed)
        checkpoints = list(account.checkpoints)
        workers = self._workers(spec)
        pending: Dict[asyncio.Task, TrialRecord] = {}
        records = [] if records is None else records
        exhausted = False

        try:
            while checkpoints:
                while not exhausted and len(pending) < workers and not self._due(optimizer, checkpoints[0]):
                    try:
                        trial = optimizer.suggest()
                    except BudgetExhausted:
                        exhausted = True
                        break
                    self._trial_started(spec, run_index, optimizer, trial)
                    task = asyncio.create_task(
                        objective.evaluate(trial.config, trial.seed, trial.budget_fraction)
                    )
                    pending[task] = trial

                if pending:
                    done, _ = await asyncio.wait(pending, return_when=asyncio.FIRST_COMPLETED)
                    for task in sorted(done, key=lambda t: pending[t].trial_id):
                        self._trial_completed(spec, run_index, optimizer, pending.pop(task), task)
                    continue

                # nothing in flight: every checkpoint passed so far can be taken
                while checkpoints and (exhausted or self._due(optimizer, checkpoints[0])):
                    records.append(await self._checkpoint(spec, run_index, optimizer, objective,
                                                          checkpoints.pop(0), eval_rng))
        finally:
            for task in pending:
                task.cancel()
            # cancelled requests must release their workers before the next run starts
            await asyncio.gather(*pending, return_exceptions=True)
        return records

    @staticmethod
    def _due(optimizer: LedgerOptimizer, checkpoint: float) -> bool:
        return optimizer.account.spent >= checkpoint - BudgetAccount.TOLERANCE

    def _trial_started(self, spec: ExperimentSpec, run_index: int, optimizer: LedgerOptimizer,
                       trial: TrialRecord) -> None:
        self.log.emit(
            "trial_started", run_index, spec.method.label,
            trial_id=trial.trial_id, config_id=trial.config_id, config=trial.config.to_dict(),
            seed=trial.seed, budget_fraction=trial.budget_fraction, rung=trial.rung,
            spent=optimizer.account.spent,
        )

    def _trial_completed(self, spec: ExperimentSpec, run_index: int, optimizer: LedgerOptimizer,
                         trial: TrialRecord, task: asyncio.Task) -> None:
        try:
            loss = task.result()
        except WorkerFailure as e:
            # the budget stays spent; the trial never reaches the model
            optimizer.fail(trial.trial_id, f"{type(e).__name__}: {e}")
            if e.diagnostics:
                logger.debug(f"Worker stderr for trial {trial.trial_id}:\n{e.diagnostics}")
        else:
            optimizer.observe(trial.trial_id, loss)
        self.log.emit(
            "trial_completed", run_index, spec.method.label,
            trial_id=trial.trial_id, status=trial.status.value,
            value=_reward(trial.value) if trial.status is TrialStatus.COMPLETED else None,
            error=trial.error,
        )

    async def _checkpoint(self, spec: ExperimentSpec, run_index: int, optimizer: LedgerOptimizer,
                          objective: ObjectivePort, checkpoint: float,
                          eval_rng: np.random.Generator) -> CheckpointRecord:
        method = spec.method.label
        config = optimizer.select_incumbent()
        best_observed = _reward(optimizer.best_observed_value(config))
        spent = optimizer.account.spent
        trials_used = len(optimizer.trials)
        self.log.emit(
            "checkpoint_recommendation", run_index, method,
            checkpoint=checkpoint, config=config.to_dict(), best_observed=best_observed,
            spent=spent, trials_used=trials_used,
        )

        mean_loss, true_loss, seeds = await final_evaluation(spec, objective, config, eval_rng)
        optimum = objective.optimum_loss()
        regret = None if true_loss is None or optimum is None else float(true_loss - optimum)
        record = CheckpointRecord(
            method=method,
            run_index=run_index,
            checkpoint=checkpoint,
            config=config,
            final_mean=-mean_loss,
            true_value=_reward(true_loss),
            regret=regret,
            best_observed=best_observed,
            trials_used=trials_used,
            spent=spent,
        )
        self.log.emit(
            "final_evaluation", run_index, method,
            checkpoint=checkpoint, config=config.to_dict(), final_mean=record.final_mean,
            true_value=record.true_value, regret=regret, best_observed=best_observed,
            optimism_gap=record.optimism_gap, trials_used=trials_used, spent=spent, eval_seeds=len(seeds),
        )
        logger.info(
            f"[{method}] run {run_index} checkpoint {checkpoint:g}: final mean {record.final_mean:.5g} "
            f"over {len(seeds)} seeds ({trials_used} trials, spent {spent:.4g})"
        )
        return record


async def run_experiment(spec: ExperimentSpec, results_log: Optional[ResultsLog] = None) -> ExperimentReport:
    return await ExperimentRunner(results_log).run_experiment(spec)
