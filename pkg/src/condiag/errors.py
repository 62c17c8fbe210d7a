"""Exception hierarchy shared across the package.

Every exception carries a short machine-parsable ``category`` used by the
CLI to build its single-line error prefix.
"""


class CondiagError(Exception):
    """Base class for all package errors."""

    category = "internal"


class ValidationError(CondiagError):
    """Invalid data or arguments (shape, finiteness, labels, dimensions)."""

    category = "data"


class FormatError(CondiagError):
    """Malformed on-disk input (matrix files, manifests, configs)."""

    category = "format"


class ConvergenceError(CondiagError):
    """An iterative solver failed to reach its tolerance.

    ``off_ratio`` records the relative off-diagonal energy achieved when
    the iteration budget ran out.
    """

    category = "convergence"

    def __init__(self, message: str, off_ratio: float | None = None):
        super().__init__(message)
        self.off_ratio = off_ratio


class TrainingError(CondiagError):
    """Classifier training diverged (non-finite loss).

    ``iteration`` is the first iteration at which the loss was non-finite.
    """

    category = "training"

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration
