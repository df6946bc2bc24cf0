"""Soft-min energy interacting-particle optimizer and experiment harness."""

from . import _kernels, dynamics, experiments, objectives, softmin, theory
from ._kernels import active as active_backend
from ._kernels import available_backends, use_backend
from .errors import (ConfigError, ContractViolationError,
                     CriticalPointNotFoundError, DivergenceError)
from .softmin import Swarm

__version__ = "0.1.0"

__all__ = [
    "Swarm",
    "active_backend",
    "available_backends",
    "use_backend",
    "dynamics",
    "experiments",
    "objectives",
    "softmin",
    "theory",
    "ConfigError",
    "ContractViolationError",
    "CriticalPointNotFoundError",
    "DivergenceError",
    "__version__",
]
