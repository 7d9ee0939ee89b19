"""Exception types shared across the package.

Every domain failure raises a subclass of :class:`NavsimError`, so callers
(CLI, service) can catch one base type and map it to an exit code or an
error message without losing the specific failure kind.
"""


class NavsimError(Exception):
    """Base class for all domain errors."""


class MalformedDocument(NavsimError):
    """Input bytes are not a parseable document."""


class SchemaViolation(NavsimError):
    """Document parsed but a field is missing or has the wrong type."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class InvariantViolation(NavsimError):
    """A structurally valid document breaks a data invariant."""

    def __init__(self, message: str, path: str = "", violations=None):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.violations = violations or []


class NonMonotonicFrames(NavsimError):
    """Replay frame indices regressed."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class BindingError(NavsimError):
    """Replay references a map point id that is not in the map."""

    def __init__(self, point_id: int, frame: int):
        super().__init__(f"frame {frame} observes unknown point id {point_id}")
        self.point_id = point_id
        self.frame = frame


class NegativeDistance(NavsimError):
    """A distance argument was negative."""


class MissingCalibration(NavsimError):
    """Operation needs a map/real-world scale reference but none is set."""


class NoCheckpoints(NavsimError):
    """Map carries no checkpoints to evaluate."""


class EmptyInput(NavsimError):
    """An aggregate was requested over an empty collection."""


class DegenerateGeometry(NavsimError):
    """Direction is undefined because the camera coincides with a keyframe."""


class EmptyMap(NavsimError):
    """Map has no keyframes."""


class TooFewKeyframes(NavsimError):
    """Map has fewer keyframes than the operation needs."""


class NoVisiblePoints(NavsimError):
    """No map point is visible in the frame, so anchoring is impossible."""


class OutOfOrderFrame(NavsimError):
    """A frame arrived with an index not greater than the last processed."""


class InvalidMap(NavsimError):
    """Map failed validation at session start."""

    def __init__(self, message: str, violations=None):
        super().__init__(message)
        self.violations = violations or []


class EmptyLabels(NavsimError):
    """Accuracy evaluation got an empty label list."""


class InvalidShapeParams(NavsimError):
    """Synthetic path shape parameters are out of range."""


class BindFailure(NavsimError):
    """Server could not bind the requested address."""
