"""Desk-scale simulator of a quantum solver for the discretized Poisson
equation, with bit-exact fixed-point kernels and classical reference solvers."""

from .classical_ref import cg_solve, dense_expm, direct_solve
from .errors import (ContractViolation, DegenerateInputError, FixedPointOverflowError,
                     InvalidParameter, LayoutViolation, PostselectionError, QPoissonError,
                     ResourceLimitError)
from .fixedpoint import ComplexFixed, FixedPoint
from .grid import DiscreteLaplacian, RhsVector
from .kernels import EsaParams, derive_params
from .qsim import RegisterLayout, StateVector
from .solver import (SolverConfig, SolverResult, error_budget, parameters,
                     repeat_until_success, resource_estimate, solve)

__version__ = "0.1.0"

__all__ = [
    "ComplexFixed", "ContractViolation", "DegenerateInputError", "DiscreteLaplacian",
    "EsaParams", "FixedPoint", "FixedPointOverflowError", "InvalidParameter",
    "LayoutViolation", "PostselectionError", "QPoissonError", "RegisterLayout",
    "ResourceLimitError", "RhsVector", "SolverConfig", "SolverResult", "StateVector",
    "cg_solve", "dense_expm", "derive_params", "direct_solve", "error_budget",
    "parameters", "repeat_until_success", "resource_estimate", "solve", "__version__",
]
