"""Exceptions raised by priorshift."""


class PriorShiftError(ValueError):
    """Base class for all data and validation errors in this package."""


class InvalidScores(PriorShiftError):
    """Log-scores contain NaN or infinite values, or have a bad shape."""


class InvalidPosteriors(PriorShiftError):
    """A matrix is not row-stochastic."""


class InvalidPrior(PriorShiftError):
    """A prior vector is not a probability distribution."""


class InvalidLabels(PriorShiftError):
    """Labels are out of range or do not match the data."""


class EmptyLabel(PriorShiftError):
    """A label name has no token log-probabilities."""


class InvalidTokenProb(PriorShiftError):
    """A token log-probability is positive or not finite."""


class EmptyTrainingSet(PriorShiftError):
    """An estimate was requested from zero samples."""


class ZeroClassCount(PriorShiftError):
    """A class never occurs where its probability must be estimated."""

    def __init__(self, message, classes=()):
        super().__init__(message)
        self.classes = tuple(classes)


class DegeneratePrior(PriorShiftError):
    """A prior used as a divisor (or under a log) has a zero entry."""


class DegenerateColumn(PriorShiftError):
    """Some class receives no posterior mass on the whole training set."""


class DegenerateReference(PriorShiftError):
    """The naive reference system has zero cross-entropy."""


class ParseError(PriorShiftError):
    """A line of an input file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(ParseError):
    """A record does not match the header of its file."""


class DuplicateId(ParseError):
    """The same record id appears twice in one file."""


class IoError(OSError):
    """A file could not be read or written."""
