"""Exception hierarchy shared across the package."""


class FiggenError(Exception):
    """Base class for all package errors."""


class ParseError(FiggenError):
    """A record or model response could not be parsed."""


class ValidationError(FiggenError):
    """An invariant was violated; the message names the offending field."""

    def __init__(self, field: str, message: str = ""):
        self.field = field
        super().__init__(message or f"invalid field: {field}")


class SchemaVersionError(FiggenError):
    """A persisted artifact carries an unknown schema version."""


class TransportError(FiggenError):
    """A backend call failed at the transport level (retryable)."""


class EmptyResponseError(FiggenError):
    """The backend returned an empty completion."""


class SafetyRefusalError(FiggenError):
    """The backend declined the request; never retried."""


class MissingScriptError(FiggenError):
    """A scripted scenario has no response for the requested step."""


class GuidelineSynthesisError(FiggenError):
    """Every batch of the guideline synthesis failed."""


class JudgeError(FiggenError):
    """The judge response could not be interpreted."""


class DegenerateError(FiggenError):
    """A statistic is undefined for the given input (e.g. constant vector)."""


class AlignmentError(FiggenError):
    """Two score sets do not cover the same case ids."""


class CapabilityError(FiggenError):
    """The bound backend lacks a required capability (e.g. image editing)."""
