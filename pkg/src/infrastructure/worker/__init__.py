from .client import WorkerClient
from .protocol import PROTOCOL, Handshake, TrialReply, TrialRequest
from .validation import CheckResult, validate_worker
