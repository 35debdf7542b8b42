"""Exception hierarchy."""


class HDLingamError(Exception):
    """Base class for all package errors."""


class InputError(HDLingamError, ValueError):
    """Malformed argument: unknown node label, bad exponent, empty set, ..."""


class StructureError(HDLingamError):
    """Graph structure problem, e.g. a directed cycle or singular ``I - B``."""


class NumericalError(HDLingamError, ArithmeticError):
    """A linear solve or positive-definiteness check failed."""

    def __init__(self, message, *, v=None, C=None, step=None):
        super().__init__(message)
        self.v = v
        self.C = C
        self.step = step


class StateError(HDLingamError):
    """Incremental state used against the wrong candidate set."""
