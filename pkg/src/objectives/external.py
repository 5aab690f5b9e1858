from typing import List
import asyncio
import logging

from ..domain.models import Config, ObjectiveSpec, ParamSpace
from ..domain.search_space import to_raw
from ..infrastructure.worker.client import WorkerClient
from ..ports.optimizer_port import ObjectivePort

logger = logging.getLogger(__name__)


class ExternalObjective(ObjectivePort):
    """Evaluates trials on a pool of worker processes.

    Workers report rewards (higher is better); the optimizer receives the negated value.
    A worker that timed out or broke protocol is respawned on its next trial.
    """

    def __init__(self, spec: ObjectiveSpec, space: ParamSpace, workers: int = 1):
        if not spec.command:
            raise ValueError("external objective requires a command")
        self.spec = spec
        self.space = space
        self.clients: List[WorkerClient] = [
            WorkerClient(spec.command, timeout_s=spec.timeout_s) for _ in range(max(1, workers))
        ]
        self._idle: asyncio.Queue = asyncio.Queue()
        for client in self.clients:
            self._idle.put_nowait(client)

    async def evaluate(self, config: Config, seed: int, budget_fraction: float = 1.0) -> float:
        client: WorkerClient = await self._idle.get()
        try:
            reward = await client.request(to_raw(self.space, config), seed=seed, budget=budget_fraction)
        finally:
            self._idle.put_nowait(client)
        return -reward

    async def close(self) -> None:
        await asyncio.gather(*(client.close() for client in self.clients))
        logger.debug(f"Closed {len(self.clients)} worker(s) for '{self.spec.command}'")
