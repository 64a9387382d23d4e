"""Exception hierarchy.

``ValidationError`` covers bad inputs and malformed files (CLI exit code 1);
``NumericalError`` covers runtime numerical failures such as divergence or
singular matrices (CLI exit code 2).
"""

import numpy as np


class FemkitError(Exception):
    """Base class for all package errors."""


class ValidationError(FemkitError, ValueError):
    """Invalid input data, configuration, or arguments."""


class FormatError(ValidationError):
    """Malformed or mismatched file content."""


class NumericalError(FemkitError, RuntimeError):
    """A numerical procedure failed (divergence, singularity, ...)."""


class SingularMatrixError(NumericalError):
    """A matrix required to be invertible is numerically singular."""


class ConvergenceError(NumericalError):
    """An iterative procedure failed to converge."""


class SimulationDivergedError(NumericalError):
    """Langevin integration left the numeric range."""

    def __init__(self, chain: int, step: int, max_abs: float):
        self.chain = chain
        self.step = step
        self.max_abs = max_abs
        super().__init__(
            f"simulation diverged on chain {chain} at step {step} "
            f"(max |x| = {max_abs:.3e})"
        )


class TrainingDivergedError(NumericalError):
    """Training loss became non-finite; carries the last finite parameters."""

    def __init__(self, epoch: int, last_theta: np.ndarray):
        self.epoch = epoch
        self.last_theta = last_theta
        super().__init__(f"training loss became non-finite at epoch {epoch}")
