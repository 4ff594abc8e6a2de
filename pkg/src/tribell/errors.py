"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes: DomainError -> 2,
ConvergenceError -> 3, OSError -> 4.
"""


class TribellError(Exception):
    """Base class for all package errors."""


class DomainError(TribellError, ValueError):
    """An argument is outside the domain an operation is defined on."""


class EstimationError(DomainError):
    """An estimator is undefined for the given counts (e.g. all zero)."""


class IdentifiabilityError(DomainError):
    """Tomography data does not determine the state (rank-deficient map)."""


class ConvergenceError(TribellError, RuntimeError):
    """An iterative routine failed to converge.

    Carries the best result found so far in ``best``, when available.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
