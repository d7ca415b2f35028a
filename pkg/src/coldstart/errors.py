"""Exception types shared across the package."""

from __future__ import annotations


class ColdstartError(Exception):
    """Base class for all package errors."""


class InputError(ColdstartError):
    """A caller violated a documented precondition."""


class LineParseError(ColdstartError):
    """A JSONL line could not be parsed; carries the 1-based line number."""

    def __init__(self, path: str, line_no: int, cause: str):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {cause}")


class RecordValidationError(ColdstartError):
    """A loaded record violates a type invariant (e.g. duplicate id)."""


class ConfigError(ColdstartError):
    """Bad pipeline or backend configuration."""


class BackendError(ColdstartError):
    """A text-generation backend failed after exhausting retries."""

    def __init__(self, backend_id: str, cause: Exception | str):
        self.backend_id = backend_id
        self.cause = cause
        super().__init__(f"backend '{backend_id}': {cause}")


class MockPromptError(ColdstartError):
    """The offline mock received a prompt without the expected structure markers."""


class OutputParseError(ColdstartError):
    """Model output contained no parsable JSON object."""


class SchemaError(OutputParseError):
    """Parsed JSON is missing or has an invalid required field."""

    def __init__(self, field: str, detail: str = ""):
        self.field = field
        msg = f"missing or invalid field: {field}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class JudgeParseError(ColdstartError):
    """Judge output lacked the required final-line A/B/TIE token."""


class CalibrationError(ColdstartError):
    """Label files share no joinable rows."""


class StageError(ColdstartError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
