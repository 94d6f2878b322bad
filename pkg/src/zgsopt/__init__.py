"""Predefined-time distributed optimization on a sliding zero-gradient-sum manifold."""

from .costs import CostFunction, ConvexityConstants, benchmark_suite_A, estimate_constants
from .dynamics import AlgorithmParams, NetworkState, network_rhs, validate_params
from .errors import (
    AssumptionError,
    ConnectivityError,
    ConvexityError,
    DerivativeError,
    DivergenceError,
    NumericalError,
    ParameterError,
    SingularHessianError,
    ValidationError,
    ZGSError,
)
from .graph import SwitchingSchedule, Topology, build_topology, spectrum, topology_at
from .oracle import centralized_minimize, scalar_pdt_decay, tracking_reference
from .sim import RunSummary, Scenario, Trajectory, simulate, summarize

__version__ = "0.1.0"

__all__ = [
    "AlgorithmParams", "AssumptionError", "ConnectivityError", "ConvexityConstants",
    "ConvexityError", "CostFunction", "DerivativeError", "DivergenceError", "NetworkState",
    "NumericalError", "ParameterError", "RunSummary", "Scenario", "SingularHessianError",
    "SwitchingSchedule", "Topology", "Trajectory", "ValidationError", "ZGSError",
    "benchmark_suite_A", "build_topology", "centralized_minimize", "estimate_constants",
    "network_rhs", "scalar_pdt_decay", "simulate", "spectrum", "summarize", "topology_at",
    "tracking_reference", "validate_params",
]
