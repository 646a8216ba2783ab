"""Steady Drucker-Prager visco-plastic flow between two walls.

Closed-form objects (1D minimizer, yield-curve profiles, cone chart, barrier
functions) live next to a finite-difference solver for the regularized 2D
energy, so the numerical free boundary can be checked against the analytic
bounds.
"""

from ._accel import backend
from .barriers import BarrierPair, make_pair, optimize_lambda1, pi_gap
from .cone import ConeChart, laplacian_constants
from .errors import ConvergenceError, DomainError, GeometryError, YieldflowError
from .oned import OneDSolution, epsilon_min, minimal_energy, solve_oned
from .profiles import LambdaParams, make_params, phi
from .solver import GridField, SolveReport, solve

__version__ = "0.1.0"

__all__ = [
    "BarrierPair",
    "ConeChart",
    "ConvergenceError",
    "DomainError",
    "GeometryError",
    "GridField",
    "LambdaParams",
    "OneDSolution",
    "SolveReport",
    "YieldflowError",
    "backend",
    "laplacian_constants",
    "make_pair",
    "make_params",
    "optimize_lambda1",
    "phi",
    "pi_gap",
    "solve",
    "solve_oned",
    "epsilon_min",
    "minimal_energy",
]
