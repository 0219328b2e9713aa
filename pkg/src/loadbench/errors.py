"""Exception hierarchy shared across the pipeline stages."""


class LoadBenchError(Exception):
    """Base class for all pipeline errors."""


class InvalidRange(LoadBenchError):
    pass


class AlignmentError(LoadBenchError):
    pass


class EmptyInput(LoadBenchError):
    pass


class ParseError(LoadBenchError):
    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class DuplicateReading(ParseError):
    pass


class ContractViolation(LoadBenchError):
    pass


class InsufficientHistory(LoadBenchError):
    pass


class NoTestData(LoadBenchError):
    pass


class MissingStats(LoadBenchError):
    pass


class DegenerateSeries(LoadBenchError):
    pass


class AdapterError(LoadBenchError):
    """Transport or protocol failure talking to an external forecaster.

    Carries the raw offending payload (when one exists) for diagnostics.
    """

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload


class RunAborted(LoadBenchError):
    pass


class ConfigError(LoadBenchError):
    pass


class DegenerateSplitWarning(UserWarning):
    """Cross-dataset trimming emptied every training series of a dataset."""
