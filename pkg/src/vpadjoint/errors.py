"""Exceptions raised by the variable-projection routines."""


class VarproError(Exception):
    """Base class for all package errors."""


class RankDeficient(VarproError):
    """The factor B has numerically dependent columns.

    ``column`` is the zero-based index of the column whose deflated norm fell
    below the rank tolerance.
    """

    def __init__(self, column, ratio=None):
        self.column = column
        self.ratio = ratio
        msg = f"column {column} is numerically dependent on the previous ones"
        if ratio is not None:
            msg += f" (deflated/original norm = {ratio:.3e})"
        super().__init__(msg)


class ObjectiveNearZero(VarproError):
    """The residual is at exact-fit level, where the gradient of the
    square-root objective is singular."""

    def __init__(self, f, threshold):
        self.f = f
        self.threshold = threshold
        super().__init__(f"objective {f:.3e} is below the gradient threshold {threshold:.3e}")


class SizeCap(VarproError):
    """Problem too large for an explicitly materialized oracle."""
