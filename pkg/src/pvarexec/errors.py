"""Exception hierarchy shared by every module.

Input problems (bad files, infeasible orders) derive from :class:`InputError`;
failures inside the numerical machinery derive from :class:`SolverError`.  The
CLI maps the two families to distinct exit codes.
"""

from __future__ import annotations


class ExecutionError(Exception):
    """Base class for all package errors."""

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": str(self)}


class InputError(ExecutionError):
    pass


class ProfileError(InputError):
    """Malformed or invalid market profile; carries the offending data row."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["row"] = self.row
        return d


class OrderError(InputError):
    """Order rejected at validation."""


class InfeasibleOrderError(OrderError):
    """The order cannot be executed under its participation cap."""


class SolverError(ExecutionError):
    pass


class NumericOverflowError(SolverError):
    """A recursion step produced a non-finite value."""

    def __init__(self, message: str, pillar: int):
        super().__init__(message)
        self.pillar = pillar

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["pillar"] = self.pillar
        return d


class ShootingError(SolverError):
    """Bisection ran out of iterations; carries the last bracket."""

    def __init__(self, message: str, bracket: tuple[float, float]):
        super().__init__(message)
        self.bracket = bracket

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["bracket"] = list(self.bracket)
        return d


class InvariantError(SolverError):
    """An internal invariant (bracket sign ordering, monotonicity) was violated."""


class MinSliceUnattainableError(SolverError):
    """No start pillar yields slices at least the minimum size."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class SingularDesignError(SolverError):
    """Regression design matrix is rank deficient."""


class UnattainablePillarError(SolverError):
    """Requested start pillar lies outside what the exponent bounds can reach."""

    def __init__(self, message: str, attainable: tuple[int, int]):
        super().__init__(message)
        self.attainable = attainable

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["attainable"] = list(self.attainable)
        return d
