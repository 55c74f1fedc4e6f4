"""Bounds and experiments for universal sparse representation with random
and Gaussian dictionaries."""
from .bounds import BoundId, BoundReport, RegimeParams
from .coder import SparseApproximation, block_exact, group_omp, omp
from .errors import ConfigurationError, ConvergenceError, DomainError, HypothesisError, ScanLimitError
from .montecarlo import SuccessEstimate, ZMoments, estimate_success, scan_min_overcompleteness
from .randmodel import Dictionary, ProblemInstance, Signal

__version__ = "0.1.0"

__all__ = [
    "BoundId",
    "BoundReport",
    "ConfigurationError",
    "ConvergenceError",
    "Dictionary",
    "DomainError",
    "HypothesisError",
    "ProblemInstance",
    "RegimeParams",
    "ScanLimitError",
    "Signal",
    "SparseApproximation",
    "SuccessEstimate",
    "ZMoments",
    "block_exact",
    "estimate_success",
    "group_omp",
    "omp",
    "scan_min_overcompleteness",
]
