"""Exception types shared across the toolkit."""


class RelightError(Exception):
    """Base class for all toolkit errors."""


class MissingFile(RelightError):
    pass


class DimensionMismatch(RelightError):
    pass


class MalformedLpLine(RelightError):
    """Raised for an unparseable .lp line; carries the 1-based line number."""

    def __init__(self, path, line_no, reason):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = str(path)
        self.line_no = line_no
        self.reason = reason


class NonHemisphericalLight(RelightError):
    pass


class EmptyTrainSet(RelightError):
    pass


class FractionOutOfRange(RelightError):
    pass


class EmptyTrainingSet(RelightError):
    pass


class TeacherUntrained(RelightError):
    pass


class AlphaOutOfRange(RelightError):
    pass


class RankDeficientLights(RelightError):
    pass


class OrderUnsupported(RelightError):
    pass


class NonFiniteLatent(RelightError):
    pass


class SchemaViolation(RelightError):
    pass


class PlaneDimensionMismatch(RelightError):
    pass


class CountMismatch(RelightError):
    pass


class ShapeMismatch(RelightError):
    pass


class ImageTooSmall(RelightError):
    pass
