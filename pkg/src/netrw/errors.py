"""Exception types shared across the package."""


class NetrwError(Exception):
    """Base class for all package errors."""


class UnknownLetter(NetrwError):
    pass


class PortOutOfRange(NetrwError):
    pass


class PortDoublyOccupied(NetrwError):
    pass


class NoCommonHost(NetrwError):
    pass


class UnmappedLetter(NetrwError):
    pass


class MissingOperation(NetrwError):
    pass


class NonConvergent(NetrwError):
    pass


class DemandViolation(NetrwError):
    pass


class BudgetExceeded(NetrwError):
    """Raised only when a caller asked for strict budgets; most APIs flag instead."""


class PreconditionFailed(NetrwError):
    pass


class SizeBound(NetrwError):
    pass


class TypeMismatch(NetrwError):
    pass


class ReplayFailure(NetrwError):
    pass


class NotDistinctive(NetrwError):
    pass


class NotACover(NetrwError):
    pass


class NoSaturatingBlock(NetrwError):
    pass


class NotAnbh(NetrwError):
    pass


class UnsupportedSubstitution(NetrwError):
    pass


class OutOfDomain(NetrwError):
    pass


class CorruptEntry(NetrwError):
    pass


class ParseError(NetrwError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
