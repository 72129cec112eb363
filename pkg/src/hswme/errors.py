"""Exception types raised by the solvers."""
import numpy as np


class HSWMEError(Exception):
    pass


class DepthError(HSWMEError, ValueError):
    """A water height is zero, negative or not finite."""

    def __init__(self, message, cell=None, step=None):
        super().__init__(message)
        self.cell = cell
        self.step = step


class SingularSystemError(HSWMEError, np.linalg.LinAlgError):
    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class SolverAbort(HSWMEError, RuntimeError):
    """A time loop hit a non-physical or non-finite state."""

    def __init__(self, message, step=None, cell=None):
        super().__init__(message)
        self.step = step
        self.cell = cell
