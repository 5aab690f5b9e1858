from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Union
import json
import logging
import os

from ...domain.errors import CorruptLog

logger = logging.getLogger(__name__)

EVENT_KINDS = (
    "trial_started",
    "trial_completed",
    "checkpoint_recommendation",
    "final_evaluation",
    "run_failed",
)


class ResultsLog:
    """Append-only JSONL event log for one experiment invocation."""

    def __init__(self, path: Union[str, Path, None] = None, deterministic: bool = False):
        self.path = Path(path) if path is not None else None
        self.deterministic = deterministic
        self.event_index = 0
        self.events: List[Dict[str, Any]] = []
        self._handle = None
        if self.path is not None:
            os.makedirs(self.path.parent, exist_ok=True)
            # a fresh invocation starts a fresh log
            self._handle = open(self.path, "w", encoding="utf-8")

    def emit(self, kind: str, run_index: int, method: str, **payload: Any) -> Dict[str, Any]:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind '{kind}'")
        event: Dict[str, Any] = {
            "event": kind,
            "event_index": self.event_index,
            "run_index": run_index,
            "method": method,
            **payload,
        }
        if not self.deterministic:
            event["timestamp"] = datetime.now(timezone.utc).isoformat()
        self.event_index += 1
        self.events.append(event)
        if self._handle is not None:
            self._handle.write(json.dumps(event, sort_keys=True, separators=(",", ":")) + "\n")
            self._handle.flush()
        return event

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def __enter__(self) -> 'ResultsLog':
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()


def read_events(path: Union[str, Path], kind: Optional[str] = None) -> List[Dict[str, Any]]:
    """Load events from a log; a truncated final line is skipped with a warning."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    events: List[Dict[str, Any]] = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            event = json.loads(line)
        except json.JSONDecodeError as e:
            if number == len(lines):
                logger.warning(f"Ignoring truncated last line {number} of {path}")
                break
            raise CorruptLog(f"{path}:{number}: {e}")
        if kind is None or event.get("event") == kind:
            events.append(event)
    return events
