"""Exception types shared across the pipeline.

Two families matter to the CLI: :class:`ConfigError` (exit code 1) and
:class:`DataError` (exit code 2). Everything raised by parsing, splitting
or scoring malformed inputs derives from ``DataError``.
"""


class DiverankError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(DiverankError, ValueError):
    """Invalid experiment or model configuration."""


class InvalidConfig(ConfigError):
    """Invalid hyperparameters for a model (e.g. ``d=0``)."""


class DataError(DiverankError, ValueError):
    """Input data is missing, malformed or violates a precondition."""


class MalformedLine(DataError):
    def __init__(self, line_number: int, line: str = "", reason: str = ""):
        self.line_number = line_number
        self.line = line
        self.reason = reason
        msg = f"malformed line {line_number}"
        if reason:
            msg += f": {reason}"
        if line:
            msg += f" ({line!r})"
        super().__init__(msg)


class EmptyCorpus(DataError):
    pass


class EmptyPool(DataError):
    pass


class PreconditionError(DataError):
    pass


class EmptyCandidates(DataError):
    pass


class EmptyList(DataError):
    pass


class InvalidAlpha(DataError):
    pass


class PositionOutOfRange(DataError):
    pass


class EmptyUserSet(DataError):
    pass


class StageError(DiverankError):
    """Wraps an error raised inside a pipeline stage with the stage's name."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
