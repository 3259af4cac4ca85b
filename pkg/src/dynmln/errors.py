class DynmlnError(Exception):
    """Base class for package errors."""


class ConfigError(DynmlnError, ValueError):
    pass


class DataError(DynmlnError, ValueError):
    """Malformed or inconsistent input data; carries the offending line when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(DynmlnError, ArithmeticError):
    pass


class CapacityError(DynmlnError, ValueError):
    """Latent dimension bound too small for an exact factorization."""

    def __init__(self, message, required):
        self.required = required
        super().__init__(message)
