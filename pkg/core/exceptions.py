"""Error types shared by every lab app."""

import logging
import warnings

logger = logging.getLogger(__name__)


class LabError(Exception):
    """Base class for errors raised by the lab."""


class DimensionError(LabError):
    """Operands live in spaces of different dimension."""


class DegenerateStateError(LabError):
    """A zero (or numerically zero) vector was given where a state is required."""


class ParameterError(LabError):
    """A numerical parameter violates its precondition."""


class GridSupportError(LabError):
    """A packet or walker leaves the region where the grid represents it faithfully."""


class ResolutionError(LabError):
    """The grid cannot resolve the momentum content of a state."""


class DecompositionError(LabError):
    """A Hermitian eigendecomposition failed or returned non-finite values."""


class BudgetError(LabError):
    """A joint Hilbert space exceeds the configured dimension budget."""


class ProjectionError(LabError):
    """The manifold projection did not converge.

    The best candidate found is kept on the exception so callers can decide
    whether it is usable.
    """

    def __init__(self, message: str, best_params=None, best_distance: float | None = None):
        super().__init__(message)
        self.best_params = best_params
        self.best_distance = best_distance


class OutputError(LabError):
    """An output file could not be written."""

    def __init__(self, path, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class ConfigValidationError(LabError):
    """A run configuration key is unknown, mistyped or out of range."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class LabWarning(UserWarning):
    """Soft precondition breach; the computation continues."""


class TestValidityWarning(LabWarning):
    """A statistical test is run outside its validity conditions."""

    __test__ = False


def warn(message: str, category: type[Warning] = LabWarning, stacklevel: int = 3):
    """Emit a warning and mirror it to the log."""
    logger.warning(message)
    warnings.warn(message, category, stacklevel=stacklevel)
