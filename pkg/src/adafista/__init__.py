"""Adaptive-mesh FISTA for L1-penalised reconstruction with certificates."""

from .geometry import Box
from .kernels import KernelOperator
from .mesh import Cell, DyadicMesh, PiecewiseConstant
from .wavelets import WaveletTree
from .discretize import MeshDiscretization, WaveletDiscretization
from .fista import ChambolleDossal, Energy, Greedy, SolverState, energy_value, prox_l1
from .certify import CertificateReport, certify
from .refine import RateParams, RefinePolicy, apriori_schedule, kappa
from .driver import RunResult, solve

__all__ = [
    "Box", "KernelOperator", "Cell", "DyadicMesh", "PiecewiseConstant",
    "WaveletTree", "MeshDiscretization", "WaveletDiscretization",
    "ChambolleDossal", "Greedy", "Energy", "SolverState", "energy_value",
    "prox_l1", "CertificateReport", "certify", "RateParams", "RefinePolicy",
    "apriori_schedule", "kappa", "RunResult", "solve",
]

__version__ = "0.1.0"
