"""Exception types raised across the package."""


class IsopleteError(Exception):
    """Base class for package errors."""


class InvalidInputError(IsopleteError, ValueError):
    """Malformed or non-finite input."""


class UndefinedQuantityError(IsopleteError, ValueError):
    """A quantity is undefined for the given input (e.g. coherence of zero)."""


class EmptyLineError(IsopleteError, ValueError):
    """A row or column of the sampling set is empty.

    ``axis`` is ``"row"`` or ``"column"``; ``indices`` are 0-based.
    """

    def __init__(self, axis, indices):
        self.axis = axis
        self.indices = list(indices)
        shown = ", ".join(str(i) for i in self.indices[:10])
        more = "" if len(self.indices) <= 10 else f" (+{len(self.indices) - 10} more)"
        super().__init__(f"sampling set has empty {axis}(s): {shown}{more}")


class BudgetExceededError(IsopleteError, RuntimeError):
    """Exhaustive enumeration would exceed the configured subset budget."""
