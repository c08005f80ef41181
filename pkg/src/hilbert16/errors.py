"""Exception hierarchy.

Errors are grouped by how the CLI reports them: ``DomainError`` subclasses
exit with code 1, ``NumericFailure`` subclasses with code 3.
"""


class Hilbert16Error(Exception):
    pass


class DomainError(Hilbert16Error):
    pass


class NumericFailure(Hilbert16Error):
    pass


class PolySyntaxError(DomainError, ValueError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifier(PolySyntaxError):
    pass


class ExponentOverflow(PolySyntaxError):
    pass


class IdenticallyZero(DomainError):
    pass


class DegenerateDivergence(DomainError):
    """Divergence is identically zero or a nonzero constant."""

    def __init__(self, message, constant=None):
        super().__init__(message)
        self.constant = constant


class DegenerateSystem(DomainError):
    pass


class InvalidDegree(DomainError, ValueError):
    pass


class WrongDegree(DomainError, ValueError):
    pass


class NonInteger(Hilbert16Error):
    pass


class UnassignedContact(DomainError):
    pass


class SolverInconclusive(NumericFailure):
    def __init__(self, message, undecided=()):
        super().__init__(message)
        self.undecided = list(undecided)


class WindingBroken(NumericFailure):
    pass


class NonFinite(NumericFailure):
    pass


class IrregularPath(DomainError):
    pass


class NotCritical(DomainError):
    pass


class Blowup(NumericFailure):
    pass


class NoReturn(NumericFailure):
    pass


class NotConverged(NumericFailure):
    pass


class NonIsolatedCycle(NotConverged):
    """Return map derivative is ~1: a continuum of periodic orbits."""

    def __init__(self, message, derivative):
        super().__init__(message)
        self.derivative = derivative
