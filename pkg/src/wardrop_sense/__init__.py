"""Wardrop equilibria, system optima and price-of-anarchy sensitivity to demand."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    Commodity,
    Edge,
    FlowVector,
    InfeasibleInstanceError,
    Instance,
    Network,
    PolynomialLatency,
    beckmann_term,
    eval_latency,
    eval_marginal_latency,
    scale_demands,
    total_cost,
)
from .solver import Objective, Solution, SolverConfig, relative_gap, solve  # noqa: E402
