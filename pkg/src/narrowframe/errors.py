"""Exception hierarchy shared by every solver module."""

from __future__ import annotations

import numpy as np


class NarrowFrameError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(NarrowFrameError, ValueError):
    """Input data failed validation.

    ``path`` points at the offending field (e.g. ``"transition[1]"``) when known.
    """

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ModelError(ValidationError):
    """Structurally invalid market model (e.g. a reducible chain)."""


class InfeasibleReturnError(NarrowFrameError, ArithmeticError):
    """A portfolio gross return is not strictly positive."""


class DomainError(NarrowFrameError, ArithmeticError):
    """An operator was applied outside its domain.

    ``states`` lists the state indices where the value is undefined.
    """

    def __init__(self, message: str, states=()):
        self.states = [int(s) for s in states]
        super().__init__(f"{message} (states {self.states})" if self.states else message)


class NumericalOverflowError(NarrowFrameError, OverflowError):
    def __init__(self, message: str, transition: tuple[int, int] | None = None):
        self.transition = transition
        super().__init__(message if transition is None else f"{message} at transition {transition}")


class SpectralError(NarrowFrameError, ArithmeticError):
    """Power iteration failed to converge."""


class IterationLimitError(NarrowFrameError, RuntimeError):
    """Fixed-point iteration hit ``max_iter`` without meeting the tolerance.

    Carries the last two iterates and the tail of the residual trajectory.
    """

    def __init__(self, message: str, last=None, previous=None, residuals=()):
        self.last = None if last is None else np.asarray(last, dtype=float)
        self.previous = None if previous is None else np.asarray(previous, dtype=float)
        self.residuals = list(residuals)
        super().__init__(message)
