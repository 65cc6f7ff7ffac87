"""Exception types raised across the package."""


class TeamGameError(Exception):
    """Base class for all package errors."""


class DimensionError(TeamGameError, ValueError):
    """Array shapes do not match the game or domain they are used with."""


class DomainError(TeamGameError, ValueError):
    """An argument lies outside the set where the operation is defined."""


class CapabilityError(TeamGameError):
    """The request is valid but too large for the exhaustive routine asked to handle it."""


class PreconditionError(TeamGameError, ValueError):
    """A documented precondition (e.g. 'input is a Nash equilibrium') does not hold."""


class NumericError(TeamGameError, ArithmeticError):
    """A numerical routine produced non-finite values or failed to converge."""


class DivergenceError(NumericError):
    """A trajectory produced a NaN or infinite iterate."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite iterate at step {step}")
