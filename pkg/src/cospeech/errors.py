"""Exception hierarchy shared across the engine."""


class CospeechError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(CospeechError, ValueError):
    """An input document does not match its schema."""


class OrderingError(SchemaError):
    """Transcript words overlap or are not sorted by start time."""


class NonMonotonicTime(SchemaError):
    """Gesture frame timestamps are not strictly increasing."""


class DegenerateInput(CospeechError, ValueError):
    """Too few or geometrically degenerate points for a fit."""


class NoConvergence(CospeechError, RuntimeError):
    """An iterative solver ran out of iterations."""


class EmptyPath(CospeechError, ValueError):
    pass


# gesture / extraction

class EmptySegment(CospeechError):
    """No trace frames fall inside the requested time window."""


class NoHands(CospeechError):
    pass


class DegenerateRay(CospeechError):
    """Ray direction cannot be normalized (coincident joints or cancelling rays)."""


class NoIntersection(CospeechError):
    pass


class NoSurfaceHit(CospeechError):
    pass


class ZeroLengthLine(CospeechError):
    pass


class ExtractionUnavailable(CospeechError):
    """The parameter kind has no gesture extractor (e.g. colors)."""


# execution

class UnknownFunction(CospeechError):
    pass


class UnknownObject(CospeechError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class NotManipulatable(CospeechError):
    pass


# intent

class NoFunctionMatched(CospeechError):
    pass


class EmptyTranscript(CospeechError, ValueError):
    pass


class BackendError(CospeechError):
    pass


class BackendTimeout(BackendError):
    pass


class BackendUnreachable(BackendError):
    pass


class MalformedReply(BackendError):
    """The intent backend replied with text that violates the reply schema."""

    def __init__(self, message, raw=None):
        super().__init__(message)
        self.raw = raw


class MissingGroundTruth(CospeechError):
    pass


class InvalidParameter(CospeechError, ValueError):
    """A bound parameter value is unusable (e.g. non-positive size)."""
