"""Tripartite Bell-type inequalities on GHZ-class states.

Closed-form and numerical maxima of the I10/I96/I99/I185 inequalities,
noise thresholds, and a synthetic coincidence-counting pipeline with
maximum-likelihood tomography.
"""

from . import bellcore, closedform, expsim, optimizer, qstate, tomo
from .errors import (
    ConvergenceError,
    DomainError,
    EstimationError,
    IdentifiabilityError,
    TribellError,
)

__version__ = "0.1.0"

__all__ = [
    "bellcore",
    "closedform",
    "expsim",
    "optimizer",
    "qstate",
    "tomo",
    "TribellError",
    "DomainError",
    "EstimationError",
    "IdentifiabilityError",
    "ConvergenceError",
    "__version__",
]
