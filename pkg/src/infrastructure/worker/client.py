from collections import deque
from typing import Deque, Dict, Optional
import asyncio
import logging
import shlex

from ...domain.errors import ProtocolError, WorkerError, WorkerTimeout
from .protocol import TrialRequest, encode_request, parse_handshake, parse_reply

logger = logging.getLogger(__name__)

STDERR_TAIL_LINES = 50


class WorkerClient:
    """One long-lived worker process speaking line-delimited JSON over stdin/stdout."""

    def __init__(self, command: str, timeout_s: float = 600.0):
        self.command = command
        self.timeout_s = timeout_s
        self.process: Optional[asyncio.subprocess.Process] = None
        self.stderr_tail: Deque[str] = deque(maxlen=STDERR_TAIL_LINES)
        self._stderr_task: Optional[asyncio.Task] = None
        self._next_id = 0

    @property
    def alive(self) -> bool:
        return self.process is not None and self.process.returncode is None

    @property
    def diagnostics(self) -> str:
        return "\n".join(self.stderr_tail)

    async def start(self) -> None:
        """Spawn the worker and wait for its handshake line."""
        argv = shlex.split(self.command)
        if not argv:
            raise WorkerError("empty worker command")
        try:
            self.process = await asyncio.create_subprocess_exec(
                *argv,
                stdin=asyncio.subprocess.PIPE,
                stdout=asyncio.subprocess.PIPE,
                stderr=asyncio.subprocess.PIPE,
            )
        except OSError as e:
            raise WorkerError(f"could not spawn worker '{self.command}': {e}")
        self.stderr_tail.clear()
        self._stderr_task = asyncio.create_task(self._drain_stderr(self.process))
        logger.debug(f"Spawned worker pid={self.process.pid}: {self.command}")
        line = await self._read_line("handshake")
        try:
            parse_handshake(line)
        except ProtocolError as e:
            await self.kill()
            raise ProtocolError(str(e), self.diagnostics)

    async def ensure_started(self) -> None:
        if not self.alive:
            await self.start()

    async def _drain_stderr(self, process: asyncio.subprocess.Process) -> None:
        while True:
            raw = await process.stderr.readline()
            if not raw:
                return
            text = raw.decode("utf-8", errors="replace").rstrip()
            self.stderr_tail.append(text)
            logger.debug(f"[worker {process.pid}] {text}")

    async def _read_line(self, what: str) -> bytes:
        try:
            line = await asyncio.wait_for(self.process.stdout.readline(), timeout=self.timeout_s)
        except asyncio.TimeoutError:
            await self.kill()
            raise WorkerTimeout(f"worker gave no {what} within {self.timeout_s}s", self.diagnostics)
        except ValueError as e:
            # line longer than the stream limit
            await self.kill()
            raise ProtocolError(f"unreadable {what} line: {e}", self.diagnostics)
        if not line:
            code = await self.process.wait()
            await self._flush_stderr()
            if code != 0:
                raise WorkerError(f"worker exited with code {code} before sending its {what}", self.diagnostics)
            raise WorkerError(f"worker closed stdout before sending its {what}", self.diagnostics)
        return line

    async def _flush_stderr(self) -> None:
        if self._stderr_task is not None:
            try:
                await asyncio.wait_for(self._stderr_task, timeout=1.0)
            except (asyncio.TimeoutError, asyncio.CancelledError):
                pass

    async def request(self, config: Dict[str, float], seed: int, budget: float = 1.0) -> float:
        """Send one trial and return the number the worker reports."""
        self._next_id += 1
        request = TrialRequest(id=self._next_id, config=config, seed=int(seed), budget=float(budget))
        try:
            line = await self._exchange(request)
        except asyncio.CancelledError:
            # a handshake or reply may still arrive for the abandoned request
            await self.kill()
            raise
        try:
            reply = parse_reply(line, request.id)
        except ProtocolError as e:
            # the stream is out of sync after a bad line
            await self.kill()
            raise ProtocolError(str(e), self.diagnostics)
        if reply.error is not None:
            raise WorkerError(f"worker reported: {reply.error}", self.diagnostics)
        return float(reply.value)

    async def _exchange(self, request: TrialRequest) -> bytes:
        await self.ensure_started()
        try:
            self.process.stdin.write(encode_request(request))
            await self.process.stdin.drain()
        except (BrokenPipeError, ConnectionResetError) as e:
            code = await self.process.wait()
            await self._flush_stderr()
            raise WorkerError(f"worker stdin closed (exit code {code}): {e}", self.diagnostics)
        return await self._read_line(f"reply to request {request.id}")

    async def kill(self) -> None:
        if self.alive:
            self.process.kill()
            await self.process.wait()
        await self._flush_stderr()

    async def close(self) -> None:
        """Close stdin and give the worker a moment to exit on its own."""
        if not self.alive:
            await self._flush_stderr()
            return
        try:
            self.process.stdin.close()
            await asyncio.wait_for(self.process.wait(), timeout=5.0)
        except (asyncio.TimeoutError, BrokenPipeError, ConnectionResetError):
            logger.warning(f"Worker pid={self.process.pid} did not exit after stdin closed; killing")
        await self.kill()
