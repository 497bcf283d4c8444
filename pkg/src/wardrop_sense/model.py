"""Instances of the routing problem: polynomial latencies, networks,
commodities, and the elementary cost formulas evaluated on edge flows."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class InfeasibleInstanceError(ValueError):
    """A commodity with positive demand cannot reach its destination."""


def _check_nonnegative(x: float, what: str = "flow") -> None:
    if x < 0:
        raise ValueError(f"{what} must be nonnegative, got {x!r}")


@dataclass(frozen=True)
class PolynomialLatency:
    """Latency ``sum_m coefficients[m] * x**m`` with nonnegative coefficients."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs:
            coeffs = (0.0,)
        if any(not np.isfinite(c) or c < 0 for c in coeffs):
            raise ValueError(f"latency coefficients must be finite and >= 0: {coeffs}")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def constant(cls, c: float) -> PolynomialLatency:
        return cls((c,))

    @classmethod
    def monomial(cls, p: int, scale: float = 1.0) -> PolynomialLatency:
        return cls((0.0,) * p + (scale,))

    @classmethod
    def bpr(cls, free_flow_time: float, b: float, capacity: float, power: int) -> PolynomialLatency:
        """``fft * (1 + b * (x / capacity)**power)`` expanded into coefficients."""
        coeffs = [0.0] * (power + 1)
        coeffs[0] += free_flow_time
        if b != 0 and free_flow_time != 0:
            coeffs[power] += free_flow_time * b / capacity**power
        return cls(tuple(coeffs))

    @property
    def degree(self) -> int:
        nonzero = [m for m, c in enumerate(self.coefficients) if c > 0]
        return nonzero[-1] if nonzero else 0

    def is_constant(self, atol: float = 1e-15) -> bool:
        return all(c <= atol for c in self.coefficients[1:])

    def __call__(self, x: float) -> float:
        return eval_latency(self, x)


def eval_latency(latency: PolynomialLatency, x: float) -> float:
    _check_nonnegative(x)
    acc = 0.0
    for c in reversed(latency.coefficients):
        acc = acc * x + c
    return acc


def eval_marginal_latency(latency: PolynomialLatency, x: float) -> float:
    """``l(x) + x l'(x)``, the cost an extra unit of flow imposes on the edge."""
    _check_nonnegative(x)
    acc = 0.0
    for m in range(len(latency.coefficients) - 1, -1, -1):
        acc = acc * x + (m + 1) * latency.coefficients[m]
    return acc


def beckmann_term(latency: PolynomialLatency, x: float) -> float:
    """Integral of the latency from 0 to ``x``."""
    _check_nonnegative(x)
    acc = 0.0
    for m in range(len(latency.coefficients) - 1, -1, -1):
        acc = acc * x + latency.coefficients[m] / (m + 1)
    return acc * x


@dataclass(frozen=True)
class Edge:
    tail: int
    head: int
    latency: PolynomialLatency


@dataclass(frozen=True)
class Network:
    node_count: int
    edges: tuple[Edge, ...]
    out_edges: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        edges = tuple(self.edges)
        object.__setattr__(self, "edges", edges)
        if self.node_count < 0:
            raise ValueError("node_count must be >= 0")
        adjacency: list[list[int]] = [[] for _ in range(self.node_count)]
        for eid, e in enumerate(edges):
            for v in (e.tail, e.head):
                if not 0 <= v < self.node_count:
                    raise ValueError(f"edge {eid} references node {v} outside [0, {self.node_count})")
            adjacency[e.tail].append(eid)
        object.__setattr__(self, "out_edges", tuple(tuple(a) for a in adjacency))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def degree(self) -> int:
        return max((e.latency.degree for e in self.edges), default=0)

    def coefficient_matrix(self) -> np.ndarray:
        """Dense ``(edge_count, degree + 1)`` array of latency coefficients."""
        width = max((len(e.latency.coefficients) for e in self.edges), default=1)
        out = np.zeros((self.edge_count, width))
        for eid, e in enumerate(self.edges):
            out[eid, : len(e.latency.coefficients)] = e.latency.coefficients
        return out

    def reachable_from(self, origin: int) -> set[int]:
        seen = {origin}
        queue = deque([origin])
        while queue:
            u = queue.popleft()
            for eid in self.out_edges[u]:
                v = self.edges[eid].head
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen


@dataclass(frozen=True)
class Commodity:
    origin: int
    destination: int
    demand: float

    def __post_init__(self):
        object.__setattr__(self, "demand", float(self.demand))
        if not np.isfinite(self.demand) or self.demand < 0:
            raise ValueError(f"demand must be finite and >= 0, got {self.demand!r}")
        if self.origin == self.destination:
            raise ValueError(f"commodity origin equals destination ({self.origin})")


@dataclass(frozen=True)
class Instance:
    network: Network
    commodities: tuple[Commodity, ...]

    def __post_init__(self):
        commodities = tuple(self.commodities)
        object.__setattr__(self, "commodities", commodities)
        n = self.network.node_count
        reach: dict[int, set[int]] = {}
        for i, c in enumerate(commodities):
            if not (0 <= c.origin < n and 0 <= c.destination < n):
                raise ValueError(f"commodity {i} references a node outside [0, {n})")
            if c.demand > 0:
                if c.origin not in reach:
                    reach[c.origin] = self.network.reachable_from(c.origin)
                if c.destination not in reach[c.origin]:
                    raise InfeasibleInstanceError(
                        f"commodity {i}: node {c.destination} unreachable from {c.origin}"
                    )

    @property
    def demands(self) -> np.ndarray:
        return np.array([c.demand for c in self.commodities], dtype=float)

    @property
    def degree(self) -> int:
        return self.network.degree

    def with_demands(self, demands: Sequence[float]) -> Instance:
        if len(demands) != len(self.commodities):
            raise ValueError("one demand per commodity required")
        return Instance(
            self.network,
            tuple(Commodity(c.origin, c.destination, d) for c, d in zip(self.commodities, demands)),
        )


@dataclass(frozen=True)
class FlowVector:
    edge_flows: np.ndarray

    def __post_init__(self):
        flows = np.array(self.edge_flows, dtype=float)
        if flows.ndim != 1:
            raise ValueError("edge flows must be one-dimensional")
        if np.any(flows < 0):
            raise ValueError("edge flows must be nonnegative")
        flows.setflags(write=False)
        object.__setattr__(self, "edge_flows", flows)

    def __len__(self) -> int:
        return len(self.edge_flows)


def _as_flows(instance: Instance, flows) -> np.ndarray:
    x = flows.edge_flows if isinstance(flows, FlowVector) else np.asarray(flows, dtype=float)
    if x.shape != (instance.network.edge_count,):
        raise ValueError(
            f"expected {instance.network.edge_count} edge flows, got shape {x.shape}"
        )
    return x


def total_cost(instance: Instance, flows) -> float:
    x = _as_flows(instance, flows)
    return float(sum(eval_latency(e.latency, float(fe)) * fe for e, fe in zip(instance.network.edges, x)))


def scale_demands(instance: Instance, epsilon: float) -> Instance:
    """Copy of ``instance`` with every demand multiplied by ``1 + epsilon``."""
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon!r}")
    return instance.with_demands([(1.0 + epsilon) * c.demand for c in instance.commodities])
