"""Exception hierarchy shared by the library and the CLI."""


class QFuseError(Exception):
    """Base class for all errors raised by qfuse."""


class ConfigError(QFuseError, ValueError):
    """Invalid parameters or configuration (CLI exit code 2)."""


class DataError(QFuseError, ValueError):
    """Problems with the input data itself (CLI exit code 3)."""


class InputShapeError(DataError):
    pass


class InsufficientSampleError(DataError):
    pass


class DegenerateDataError(DataError):
    pass


class CapacityError(ConfigError):
    """Requested circuit exceeds the simulator's qubit cap."""


class SchemaError(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column
