"""Exception types raised across the package.

Two families matter to the CLI: usage errors (bad parameters, unknown
method) exit with status 1, data errors (malformed files, inputs that do
not fit the model) exit with status 2.
"""


class TildaError(Exception):
    """Base class for every error raised by this package."""


class UsageError(TildaError):
    pass


class InvalidConfigError(UsageError, ValueError):
    pass


class UnknownMethodError(UsageError, ValueError):
    pass


class DataError(TildaError):
    pass


class DimensionMismatchError(DataError, ValueError):
    pass


class NonFiniteInputError(DataError, ValueError):
    pass


class EmptyModelError(DataError):
    pass


class EmptySplitError(DataError, ValueError):
    pass


class StratificationError(DataError, ValueError):
    pass


class FileFormatError(DataError):
    pass


class BadMagicError(FileFormatError):
    pass


class VersionMismatchError(FileFormatError):
    pass


class TruncatedFileError(FileFormatError):
    pass


class CorruptPayloadError(FileFormatError):
    pass


class NonFiniteValueError(FileFormatError):
    def __init__(self, row, col, value=None):
        self.row = row
        self.col = col
        super().__init__(f"non-finite value {value!r} at row {row}, column {col}")


class RaggedRowError(FileFormatError):
    def __init__(self, line, expected, actual):
        self.line = line
        super().__init__(
            f"line {line}: expected {expected} columns, found {actual}"
        )


class NonNumericCellError(FileFormatError):
    def __init__(self, line, col, cell):
        self.line = line
        self.col = col
        super().__init__(f"line {line}, column {col}: non-numeric cell {cell!r}")


class LabelFileError(FileFormatError):
    pass
