# Salbench
# Copyright 2026 - The Salbench Authors


class SalbenchError(Exception):
    """Base class for every error raised by the library."""


# Map validation


class NegativeValue(SalbenchError, ValueError):
    pass


class NonFinite(SalbenchError, ValueError):
    pass


class EmptyMap(SalbenchError, ValueError):
    pass


class ZeroMass(SalbenchError, ValueError):
    pass


class NotNormalized(SalbenchError, ValueError):
    pass


class OutOfBounds(SalbenchError, ValueError):
    pass


class ShapeMismatch(SalbenchError, ValueError):
    pass


# Metrics


class EmptyFixations(SalbenchError, ValueError):
    pass


class EmptyNegativePool(SalbenchError, ValueError):
    pass


class NonPositiveSigma(SalbenchError, ValueError):
    pass


# Transport


class UnbalancedProblem(SalbenchError, ValueError):
    pass


class NumericalFailure(SalbenchError, RuntimeError):
    pass


# Resampling and block forward


class KernelShapeMismatch(SalbenchError, ValueError):
    pass


class ChannelNotDivisible(SalbenchError, ValueError):
    pass


class WeightShapeMismatch(SalbenchError, ValueError):
    pass


class SplitMismatch(SalbenchError, ValueError):
    pass


class InvalidSpec(SalbenchError, ValueError):
    pass


# Reports and analysis


class EmptyReport(SalbenchError, ValueError):
    pass


class DuplicateRecord(SalbenchError, ValueError):
    pass


class DegenerateInput(SalbenchError, ValueError):
    pass


class MismatchedImageSets(SalbenchError, ValueError):
    pass


# Files


class ParseError(SalbenchError, ValueError):
    """A file could not be parsed. `line` is 1-based, or None when unknown."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{location}{message}")


class MissingField(ParseError):
    pass


class DuplicateImageId(ParseError):
    pass
