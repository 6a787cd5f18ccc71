"""Exception hierarchy shared by all modules."""


class NystromError(Exception):
    """Base class for library errors."""


class InputError(NystromError, ValueError):
    """Malformed or inconsistent user input (shapes, ranges, non-finite values)."""


class ConfigError(InputError):
    """Invalid experiment configuration."""


class DataError(InputError):
    """Problem with a dataset file; ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
            loc += ": "
        super().__init__(loc + message)
        self.path = path
        self.line = line


class ResourceCapError(NystromError):
    """A dense n x n computation would exceed the configured size cap."""


class NotPositiveDefinite(NystromError, ArithmeticError):
    """Cholesky factorization hit a non-positive pivot (0-based ``pivot``)."""

    def __init__(self, pivot):
        super().__init__(f"matrix is not positive definite (pivot {pivot})")
        self.pivot = pivot


class DowndateFailure(NystromError, ArithmeticError):
    """A rank-one downdate would destroy positive definiteness."""

    def __init__(self, index):
        super().__init__(f"Cholesky downdate lost positive definiteness at column {index}")
        self.index = index


class SingularFactor(NystromError, ArithmeticError):
    """Triangular factor has a zero on its diagonal."""
