"""Shortest paths, all-or-nothing loading and minimum path latencies."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import FlowVector, InfeasibleInstanceError, Instance, Network, _as_flows


@dataclass(frozen=True)
class ShortestPathTree:
    origin: int
    dist: tuple[float, ...]
    pred_edge: tuple[int | None, ...]

    def path_edges(self, network: Network, target: int) -> list[int]:
        if math.isinf(self.dist[target]):
            raise InfeasibleInstanceError(f"node {target} unreachable from {self.origin}")
        path = []
        v = target
        while v != self.origin:
            eid = self.pred_edge[v]
            path.append(eid)
            v = network.edges[eid].tail
        path.reverse()
        return path


def shortest_paths(network: Network, costs: Sequence[float], origin: int) -> ShortestPathTree:
    """Label-setting one-to-all shortest paths on nonnegative edge costs.

    Among equal-cost relaxations the lowest edge id becomes the predecessor,
    so trees are reproducible.
    """
    if isinstance(costs, np.ndarray):
        costs = costs.tolist()
    n = network.node_count
    dist = [math.inf] * n
    pred: list[int | None] = [None] * n
    done = [False] * n
    edges = network.edges
    out_edges = network.out_edges
    dist[origin] = 0.0
    heap = [(0.0, origin)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for eid in out_edges[u]:
            v = edges[eid].head
            if done[v]:
                continue
            nd = d + costs[eid]
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = eid
                heapq.heappush(heap, (nd, v))
            elif nd == dist[v] and eid < pred[v]:
                pred[v] = eid
    return ShortestPathTree(origin, tuple(dist), tuple(pred))


def origin_groups(instance: Instance) -> dict[int, list[int]]:
    """Commodity indices grouped by origin, origins in increasing order."""
    groups: dict[int, list[int]] = {}
    for i, c in enumerate(instance.commodities):
        groups.setdefault(c.origin, []).append(i)
    return dict(sorted(groups.items()))


def load_tree(instance: Instance, tree: ShortestPathTree, commodity_ids: Sequence[int],
              out: np.ndarray | None = None) -> np.ndarray:
    """Route the listed commodities (all sharing ``tree.origin``) along the tree."""
    network = instance.network
    y = np.zeros(network.edge_count) if out is None else out
    # accumulate demand per destination, then push it up the tree deepest-first
    pending = [0.0] * network.node_count
    for i in commodity_ids:
        c = instance.commodities[i]
        if c.demand <= 0:
            continue
        if math.isinf(tree.dist[c.destination]):
            raise InfeasibleInstanceError(
                f"commodity {i}: node {c.destination} unreachable from {c.origin}"
            )
        pending[c.destination] += c.demand
    order = [v for v in range(network.node_count) if tree.pred_edge[v] is not None]
    for v in _children_first(network, tree, order):
        amount = pending[v]
        if amount:
            eid = tree.pred_edge[v]
            y[eid] += amount
            pending[network.edges[eid].tail] += amount
    return y


def _children_first(network: Network, tree: ShortestPathTree, nodes: list[int]) -> list[int]:
    # depth in the tree, robust to ties in distance caused by zero-cost edges
    depth: dict[int, int] = {tree.origin: 0}

    def get_depth(v: int) -> int:
        chain = []
        while v not in depth:
            chain.append(v)
            v = network.edges[tree.pred_edge[v]].tail
        d = depth[v]
        for w in reversed(chain):
            d += 1
            depth[w] = d
        return depth[chain[0]] if chain else d

    return sorted(nodes, key=lambda v: (-get_depth(v), v))


def all_or_nothing(instance: Instance, costs: Sequence[float]) -> FlowVector:
    """Load every commodity entirely on its shortest path under ``costs``."""
    y = np.zeros(instance.network.edge_count)
    for origin, ids in origin_groups(instance).items():
        if all(instance.commodities[i].demand <= 0 for i in ids):
            continue
        tree = shortest_paths(instance.network, costs, origin)
        load_tree(instance, tree, ids, out=y)
    return FlowVector(y)


def min_path_latencies(instance: Instance, flows, costs: Sequence[float] | None = None) -> np.ndarray:
    """Minimum path latency per commodity at the given edge flows.

    ``costs`` overrides the latencies (used for marginal-cost evaluations).
    """
    if costs is None:
        x = _as_flows(instance, flows)
        costs = [e.latency(float(fe)) for e, fe in zip(instance.network.edges, x)]
    mu = np.empty(len(instance.commodities))
    for origin, ids in origin_groups(instance).items():
        tree = shortest_paths(instance.network, costs, origin)
        for i in ids:
            d = tree.dist[instance.commodities[i].destination]
            if math.isinf(d):
                raise InfeasibleInstanceError(
                    f"commodity {i}: node {instance.commodities[i].destination} unreachable"
                )
            mu[i] = d
    return mu
