"""Exception hierarchy shared by the toolkit.

Every error raised on bad input derives from :class:`AvqoeError`, which is
itself a ``ValueError`` so callers that only care about "bad data" can catch
the builtin.
"""


class AvqoeError(ValueError):
    """Base class for input and validation errors."""


# dataset ingestion / assembly
class MalformedRow(AvqoeError):
    def __init__(self, path, line, reason):
        self.path = str(path)
        self.line = line
        self.reason = reason
        super().__init__(f"{self.path}:{line}: {reason}")


class ScoreOutOfRange(MalformedRow):
    pass


class UnknownCondition(AvqoeError):
    pass


class MissingCondition(UnknownCondition):
    pass


class MissingMetadata(AvqoeError):
    pass


class DuplicateCondition(AvqoeError):
    pass


class EmptyGroup(AvqoeError):
    pass


class DimensionalityMismatch(AvqoeError):
    pass


# models
class EmptyDataset(AvqoeError):
    pass


class NonFiniteLoss(AvqoeError, ArithmeticError):
    """Raised when MLP training diverges."""


class ModelFormatError(AvqoeError):
    pass


# metrics / evaluation
class LengthMismatch(AvqoeError):
    pass


class EmptyInput(AvqoeError):
    pass


class ConstantSeries(AvqoeError):
    pass


class TooFewRows(AvqoeError):
    pass
