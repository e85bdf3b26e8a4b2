"""Exception types shared across the toolkit."""


class XlrankError(Exception):
    """Base class for all toolkit errors."""


class ParseError(XlrankError, ValueError):
    """A file could not be parsed; the message names the line and field."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(XlrankError, ValueError):
    """An invariant of the data model was violated."""


class MatrixFormatError(XlrankError, ValueError):
    """An embedding matrix file is malformed; the message names the byte offset."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


class ServiceError(XlrankError, RuntimeError):
    """A remote service returned a non-success status."""

    def __init__(self, message: str, status: int | None = None, body: str = ""):
        excerpt = body[:200]
        if status is not None:
            message = f"{message} (status {status}): {excerpt}"
        super().__init__(message)
        self.status = status
        self.body = excerpt


class TransportError(XlrankError, RuntimeError):
    """A wire call failed at the transport level after all retries."""


class ProtocolError(XlrankError, RuntimeError):
    """A remote service answered with a malformed or misaligned response."""


class RerankError(XlrankError, RuntimeError):
    """Re-ranking a run failed; names the question and offending candidate."""

    def __init__(self, question_id: str, candidate_id: str | None, message: str):
        detail = f"run {question_id!r}"
        if candidate_id is not None:
            detail += f", candidate {candidate_id!r}"
        super().__init__(f"{detail}: {message}")
        self.question_id = question_id
        self.candidate_id = candidate_id


class TranslationError(XlrankError, RuntimeError):
    """Translating an example failed; no partial output is produced."""
