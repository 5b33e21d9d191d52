"""Exception hierarchy shared by every stage of the toolkit."""


class CovprepError(Exception):
    """Base class for all errors raised by covprep."""


# ingest
class IngestError(CovprepError):
    pass


class MissingHeader(IngestError):
    pass


class MalformedDate(IngestError):
    pass


class EmptyFile(IngestError):
    pass


class DuplicateDate(IngestError):
    pass


class UnknownLocation(IngestError):
    pass


class EmptyRange(IngestError):
    pass


# outlier
class WindowTooSmall(CovprepError, ValueError):
    pass


# derive
class NonpositivePopulation(CovprepError, ValueError):
    pass


class CyclicGraph(CovprepError):
    pass


class InvalidGraph(CovprepError):
    pass


class MissingInput(CovprepError):
    pass


# select / eval
class LengthMismatch(CovprepError, ValueError):
    pass


class TooFewSamples(CovprepError, ValueError):
    pass


class Degenerate(CovprepError):
    pass


class ZeroVariance(CovprepError, ValueError):
    pass


# model
class SingularSystem(CovprepError):
    pass


class EmptyMatrix(CovprepError, ValueError):
    pass


class TooFewRows(CovprepError, ValueError):
    pass


class InvalidHyperparameter(CovprepError, ValueError):
    pass


class ConvergenceWarning(UserWarning):
    """Coordinate descent hit its sweep cap before meeting the tolerance."""


# cli
class MissingRun(CovprepError):
    pass


class ConfigError(CovprepError, ValueError):
    pass


class StageError(CovprepError):
    """Wraps a failure with the name of the pipeline stage that raised it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
