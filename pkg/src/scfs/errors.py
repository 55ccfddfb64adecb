"""Exception hierarchy shared by every module."""


class SCFSError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(SCFSError, ValueError):
    """Argument fails a shape, range or finiteness precondition."""


class ContractViolationError(InvalidInputError):
    """Data does not satisfy a contract the caller asserted (e.g. nonnegativity)."""


class ParseError(SCFSError, ValueError):
    """A dataset file could not be parsed.

    ``row`` and ``column`` are 1-based file coordinates when known.
    """

    def __init__(self, message, path=None, row=None, column=None):
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.path = path
        self.row = row
        self.column = column


class SchemaError(SCFSError, ValueError):
    """A report file does not match the expected schema."""


class SolverError(SCFSError, RuntimeError):
    """The numerical solver failed; ``config`` holds the failing configuration."""

    def __init__(self, message, config=None):
        super().__init__(message)
        self.config = config


class DivergenceError(SolverError):
    """The objective became non-finite; ``objective_trace`` holds the values so far."""

    def __init__(self, message, config=None, objective_trace=(), penalized_trace=()):
        super().__init__(message, config)
        self.objective_trace = list(objective_trace)
        self.penalized_trace = list(penalized_trace)
