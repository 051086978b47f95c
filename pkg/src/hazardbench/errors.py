"""Exception types shared across the toolkit."""


class HazardBenchError(Exception):
    """Base for all toolkit errors."""


class DataError(HazardBenchError):
    """Malformed or invalid corpus data (exit code 2 at the CLI)."""


class CorpusParseError(DataError):
    """Corpus file could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class InsufficientSamplesError(DataError):
    """A retrieval-subset request exceeds the available samples of a type."""


class StageError(HazardBenchError):
    """A pipeline stage failed (exit code 3 at the CLI)."""


class TrainingDivergedError(StageError):
    """Training aborted on a non-finite loss; message carries diagnostics."""


class JudgeParseError(HazardBenchError):
    """A judge response did not yield the expected scores."""


class ClientError(HazardBenchError):
    """An external client call failed after exhausting retries."""
