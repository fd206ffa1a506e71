"""Exception hierarchy. CLI exit codes are derived from the two base classes."""


class BcilError(Exception):
    """Base class for all package errors."""


class DataError(BcilError):
    """Bad or insufficient input data (CLI exit code 3)."""


class NumericError(BcilError):
    """Numerical failure such as divergence (CLI exit code 4)."""


class NonFinite(NumericError):
    def __init__(self, message: str, tick: int | None = None):
        super().__init__(message if tick is None else f"{message} (tick {tick})")
        self.tick = tick


class NonFiniteGradient(NumericError):
    pass


class Malformed(DataError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class VersionMismatch(DataError):
    pass


class TooShort(DataError):
    pass


class EmptyDataset(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class UnsupportedVariant(DataError):
    pass


class TaskMismatch(DataError):
    pass


class NoCycles(DataError):
    pass
