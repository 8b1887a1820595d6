"""Boundary representations of free groups: kernels, spherical functions and
convergence experiments on the Cayley tree."""

__version__ = "0.1.0"

from ._backend import BACKEND, available_backends  # noqa: E402
from .cylinders import CylinderFunction, TreeTestFunction, apply_pi, matrix_coefficient  # noqa: E402
from .errors import (  # noqa: E402
    BudgetError, ConfigError, ConvergenceError, DivergenceError, PreconditionError,
)
from .words import GroupContext  # noqa: E402

__all__ = [
    "__version__", "BACKEND", "available_backends", "GroupContext", "CylinderFunction",
    "TreeTestFunction", "apply_pi", "matrix_coefficient", "BudgetError", "ConfigError",
    "ConvergenceError", "DivergenceError", "PreconditionError",
]
