"""Exception hierarchy shared by every module.

Each class maps onto exactly one command-line exit code (see ``exit_code``).
"""


class HoeffdingError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class ValidationError(HoeffdingError, ValueError):
    """Input outside the documented domain of an operation."""

    exit_code = 2


class DomainError(ValidationError):
    """A formula is undefined at the requested point (e.g. Delta at mu in {0, 1})."""


class GridMismatchError(ValidationError):
    """f takes values off the grid {0, 1/k, ..., 1}; discretize first."""


class AssumptionViolation(HoeffdingError, ValueError):
    """The chain does not satisfy the spectral-gap hypothesis (lambda >= 1)."""

    exit_code = 3


class NotIrreducibleError(AssumptionViolation):
    def __init__(self, components):
        self.components = [list(map(int, c)) for c in components]
        super().__init__(
            "kernel is not irreducible; strongly connected components: "
            f"{self.components}"
        )


class NotReversibleError(AssumptionViolation):
    def __init__(self, pair, violation):
        self.pair = tuple(int(i) for i in pair)
        self.violation = float(violation)
        super().__init__(
            f"kernel is not reversible; worst detailed-balance violation "
            f"{self.violation:.3e} at states {self.pair}"
        )


class NumericalFailure(HoeffdingError, RuntimeError):
    """Root finder or optimizer did not converge."""

    exit_code = 4

    def __init__(self, message, bracket=None):
        self.bracket = bracket
        if bracket is not None:
            message = f"{message} (bracket state: {bracket})"
        super().__init__(message)


class AssumptionWarning(UserWarning):
    """Emitted when a computed lambda reaches 1."""


def exit_code(exc):
    """Exit code for an exception raised by this package (2 for anything unknown)."""
    return getattr(exc, "exit_code", 2)
