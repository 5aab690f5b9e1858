class SeedtuneError(Exception):
    """Base class for every error raised by seedtune."""


class DuplicateParam(SeedtuneError, ValueError):
    """Two parameters in a space share a name."""


class InvalidBounds(SeedtuneError, ValueError):
    """A parameter interval is empty or not finite."""


class OutOfBounds(SeedtuneError, ValueError):
    """A config or unit vector lies outside the search space."""


class NumericalFailure(SeedtuneError):
    """Cholesky factorization failed even after the maximum jitter."""


class InsufficientData(SeedtuneError):
    """Too few observations to fit a surrogate."""


class EmptyAggregate(SeedtuneError):
    """Averaging was requested over no values."""


class BudgetExhausted(SeedtuneError):
    """The next trial would overdraw the budget account."""


class UnknownTrial(SeedtuneError, KeyError):
    """A result was reported for a trial id the ledger never issued."""


class DuplicateResult(SeedtuneError):
    """A result was reported twice for the same trial."""


class EmptyLedger(SeedtuneError):
    """No completed trial is available to pick an incumbent from."""


class ConfigError(SeedtuneError):
    """The experiment configuration file is missing or invalid."""


class WorkerFailure(SeedtuneError):
    """Base class for failures of an external evaluation worker."""

    def __init__(self, message: str, diagnostics: str = ""):
        super().__init__(message)
        self.diagnostics = diagnostics


class WorkerError(WorkerFailure):
    """The worker reported an error or exited abnormally."""


class ProtocolError(WorkerFailure):
    """The worker wrote a line that violates the wire protocol."""


class WorkerTimeout(WorkerFailure):
    """The worker did not answer within the per-trial timeout."""


class CorruptLog(SeedtuneError):
    """A results log line other than the last one is not valid JSON."""
