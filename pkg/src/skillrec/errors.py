"""Exception types shared across the package.

One class per failure mode so callers (and the CLI exit-code mapping) can
catch precisely what they can handle.
"""


class SkillRecError(Exception):
    """Base class for all package-specific errors."""


# --- corpus loading / validation ---

class MissingFile(SkillRecError):
    pass


class SchemaViolation(SkillRecError):
    """Malformed corpus file; message carries path (and line for JSONL)."""


class DanglingReference(SkillRecError):
    """A submission or schedule entry points at an unknown problem."""


class OrderViolation(SkillRecError):
    """Non-monotone sequence numbers or non-consecutive attempt indices."""


class UnknownStudent(SkillRecError):
    pass


# --- embeddings ---

class EmptyCorpus(SkillRecError):
    pass


class DimMismatch(SkillRecError):
    pass


class CorruptRecord(SkillRecError):
    pass


class RemoteTimeout(SkillRecError):
    """Embedding service unreachable or did not answer within the timeout."""


class HttpError(SkillRecError):
    def __init__(self, status: int, message: str = ""):
        self.status = status
        super().__init__(message or f"embedding service returned HTTP {status}")


class EmbeddingFailure(SkillRecError):
    """No embedding could be produced for a source text."""


# --- context summarization ---

class EmptyAfterScope(SkillRecError):
    """Student has no submissions inside the requested scope."""


# --- training ---

class EmptyInput(SkillRecError):
    pass


class NonFiniteLoss(SkillRecError):
    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"loss became non-finite at epoch {epoch}")


# --- evaluation ---

class InsufficientData(SkillRecError):
    pass


class EmptyPool(SkillRecError):
    pass
