"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes, see :mod:`fsm_jacobi.cli`.
"""


class FsmJacobiError(Exception):
    """Base class for all package errors."""


class InvalidSet(FsmJacobiError, ValueError):
    """A coefficient set is empty or malformed."""


class NotSelfadjoint(FsmJacobiError, ValueError):
    """The main-diagonal set is not real."""


class InvalidInput(FsmJacobiError, ValueError):
    pass


class DimensionError(FsmJacobiError, ValueError):
    pass


class InvalidGrid(FsmJacobiError, ValueError):
    pass


class ConfigError(FsmJacobiError, ValueError):
    pass


class CannotExtend(FsmJacobiError):
    """Explicit fields carry no generator and cannot grow."""


class OutOfRange(FsmJacobiError, IndexError):
    pass


class UnsupportedShift(FsmJacobiError, ValueError):
    pass


class NumericalFailure(FsmJacobiError):
    """Base for failures that map to the 'numerical' exit code."""


class BudgetExceeded(NumericalFailure):
    """A work budget was exceeded.

    ``partial`` optionally carries whatever verdict was computed before
    the budget ran out.
    """

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


class HorizonExceeded(NumericalFailure):
    pass


class ExactlySingular(NumericalFailure):
    pass


class SymbolVanishes(NumericalFailure):
    pass


class ToeplitzNotInvertible(NumericalFailure):
    """Triangular Toeplitz operator whose symbol has a zero inside the disk."""


class ClassificationAbort(FsmJacobiError):
    """The Fredholm classification rules out the requested solve."""

    def __init__(self, msg, classification=None):
        super().__init__(msg)
        self.classification = classification


class NotFredholm(ClassificationAbort):
    """Classification failed; the operator is not Fredholm."""


class IndexMismatch(ClassificationAbort):
    """Fredholm, but with a plus-index the requested method cannot handle."""
