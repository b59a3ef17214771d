"""Exception hierarchy shared by all greenchain modules."""


class GreenChainError(Exception):
    """Base class for every error raised by greenchain."""


class ValidationError(GreenChainError, ValueError):
    """A chain, tree or network failed its structural invariants.

    The individual findings are kept in ``violations``.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "invalid input")


class DomainError(GreenChainError, ValueError):
    """A query falls outside the states where the quantity is defined."""


class SolverError(GreenChainError, ArithmeticError):
    """A linear solve failed or produced an untrustworthy result."""


class ConnectivityError(SolverError):
    """A voltage source has no path to any grounded vertex."""


class ConfigurationError(GreenChainError, ValueError):
    """Numerical settings are out of their admissible range."""


class ShapeError(GreenChainError, ValueError):
    """A network does not have the topology an operation needs."""


class SpecParseError(GreenChainError, ValueError):
    """A spec file could not be parsed.

    ``line`` and ``column`` are set when the failure is a JSON syntax error.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class PreconditionError(GreenChainError, ValueError):
    """An input is valid in general but not in the form an operation needs."""
