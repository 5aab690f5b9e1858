from dataclasses import dataclass
from typing import List
import logging

from ...domain.errors import WorkerFailure
from ...domain.models import Config, ParamSpec
from ...domain.search_space import build_space, to_raw
from .client import WorkerClient

logger = logging.getLogger(__name__)

PROBE_SPACE = build_space([ParamSpec.create("x", "linear", 0.0, 1.0)])
PROBES = ((0.25, 1), (0.5, 2), (0.75, 3))


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


async def validate_worker(command: str, timeout_s: float = 30.0) -> List[CheckResult]:
    """Handshake plus three probe trials over a dummy 1-d space; one result per check."""
    client = WorkerClient(command, timeout_s=timeout_s)
    results: List[CheckResult] = []
    try:
        try:
            await client.start()
            results.append(CheckResult("handshake", True, "protocol seedtune/1"))
        except WorkerFailure as e:
            results.append(CheckResult("handshake", False, f"{type(e).__name__}: {e}"))
            for index in range(len(PROBES)):
                results.append(CheckResult(f"probe {index + 1}", False, "skipped: no handshake"))
            return results

        for index, (x, seed) in enumerate(PROBES, start=1):
            config = to_raw(PROBE_SPACE, Config({"x": x}))
            try:
                value = await client.request(config, seed=seed, budget=1.0)
                results.append(CheckResult(f"probe {index}", True, f"x={x} seed={seed} -> {value:.6g}"))
            except WorkerFailure as e:
                results.append(CheckResult(f"probe {index}", False, f"{type(e).__name__}: {e}"))
                logger.debug(f"Probe {index} failed; worker stderr tail:\n{e.diagnostics}")
    finally:
        await client.close()
    return results
