"""Exception types shared across the solver stack."""

from __future__ import annotations

import numpy as np


class DimensionMismatch(ValueError):
    """Operands do not have compatible shapes."""


class NotPositiveDefinite(ArithmeticError):
    """A matrix required to be symmetric positive definite is not."""


class SingularShiftedHessian(ArithmeticError):
    """The shifted Hessian is singular (typically lambda = 0 at a saturated point)."""


class InnerSolveFailure(RuntimeError):
    """Subproblem minimizer hit its iteration cap; carries the best step found."""

    def __init__(self, message: str, h: np.ndarray, residual: float):
        super().__init__(message)
        self.h = h
        self.residual = residual


class StepSearchFailure(RuntimeError):
    """Displacement-coupling search could not land in the accepted window."""

    def __init__(self, message: str, bracket: tuple[float, float]):
        super().__init__(message)
        self.bracket = bracket


class UniformConvexityFalsified(RuntimeError):
    """Sampling found a point pair violating the configured quartic growth."""
