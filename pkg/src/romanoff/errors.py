"""Exception hierarchy. The CLI maps each class to an exit code."""


class RomanoffError(Exception):
    pass


class DomainError(RomanoffError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class RangeError(DomainError):
    """A query falls outside a precomputed or representable range."""


class PrimorialOverflowError(RangeError):
    def __init__(self, k: int, message: str | None = None):
        self.k = k
        super().__init__(message or f"primorial of the first {k} primes exceeds 64 bits")


class InputError(DomainError):
    def __init__(self, message: str, path=None, lineno: int | None = None):
        self.path = path
        self.lineno = lineno
        where = ""
        if path is not None:
            where = f"{path}:"
            if lineno is not None:
                where += f"{lineno}:"
            where += " "
        super().__init__(where + message)


class ResourceError(RomanoffError):
    """The request would exceed the configured memory budget."""

    def __init__(self, message: str, budget: int | None = None):
        self.budget = budget
        super().__init__(message)


class InvariantError(RomanoffError, AssertionError):
    """A computed result failed one of its exact self-checks."""
