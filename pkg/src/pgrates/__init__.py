"""Softmax policy gradient laboratory: exact tabular dynamics, convergence
certificates, and rate estimation."""

from .errors import ConfigError, DegenerateInstanceError, InvalidInputError, NumericalError
from .kernels import BACKEND
from .mdp_core import TabularMdp, solve_optimal, solve_soft_optimal
from .optimizer import MethodSpec, RunConfig, RunTrace, run, temperature_at

__all__ = [
    "BACKEND",
    "ConfigError",
    "DegenerateInstanceError",
    "InvalidInputError",
    "MethodSpec",
    "NumericalError",
    "RunConfig",
    "RunTrace",
    "TabularMdp",
    "run",
    "solve_optimal",
    "solve_soft_optimal",
    "temperature_at",
]
