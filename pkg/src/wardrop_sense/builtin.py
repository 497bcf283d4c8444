"""Small analytic instances with closed-form equilibria.

* nonlinear Pigou: two parallel s-t edges with latencies ``x**p`` and ``1``;
* two-commodity triangle: ``s->t1`` (``x``), ``t1->t2`` (``k**2 - 1``),
  ``s->t2`` (``k*x``) with demands 1 (to t1) and k (to t2).
"""
from __future__ import annotations

from dataclasses import dataclass

from .model import Commodity, Edge, Instance, Network, PolynomialLatency


def worst_case_poa(p: int) -> float:
    """Worst-case price of anarchy for polynomial latencies of degree ``p``."""
    if p == 0:
        return 1.0
    r = (p + 1) ** (1 + 1 / p)
    return r / (r - p)


@dataclass(frozen=True)
class PigouSpec:
    p: int
    demand: float = 1.0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("Pigou degree p must be >= 1")
        if not self.demand > 0:
            raise ValueError("demand must be positive")


@dataclass(frozen=True)
class TwoCommoditySpec:
    k: float

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


def gen_pigou(spec: PigouSpec) -> Instance:
    network = Network(2, (
        Edge(0, 1, PolynomialLatency.monomial(spec.p)),
        Edge(0, 1, PolynomialLatency.constant(1.0)),
    ))
    return Instance(network, (Commodity(0, 1, spec.demand),))


def pigou_so_flow(p: int) -> float:
    """Flow on the ``x**p`` edge at the optimum once demand exceeds it."""
    return (1.0 / (p + 1)) ** (1.0 / p)


def pigou_poa_closed_form(p: int, epsilon: float) -> float:
    """Price of anarchy of the Pigou instance with demand ``1 + epsilon``."""
    if p < 1 or epsilon < 0:
        raise ValueError("need p >= 1 and epsilon >= 0")
    saving = p / (1 + p) * pigou_so_flow(p)
    return (1 + epsilon) / (1 + epsilon - saving)


def gen_two_commodity(spec: TwoCommoditySpec) -> Instance:
    k = spec.k
    network = Network(3, (
        Edge(0, 1, PolynomialLatency((0.0, 1.0))),
        Edge(1, 2, PolynomialLatency.constant(k * k - 1.0)),
        Edge(0, 2, PolynomialLatency((0.0, k))),
    ))
    return Instance(network, (Commodity(0, 1, 1.0), Commodity(0, 2, k)))


def two_commodity_ue_closed_form(k: float, epsilon: float) -> tuple[float, float, float, float]:
    """``(mu_1, mu_2, diverted flow, total cost)`` at demands ``(1+eps)(1, k)``.

    The second commodity diverts ``eps (k - 1)`` onto the ``s->t1->t2`` route,
    which equalises both of its route latencies.
    """
    if k < 1 or epsilon < 0:
        raise ValueError("need k >= 1 and epsilon >= 0")
    y = epsilon * (k - 1)
    mu1 = 1 + k * epsilon
    mu2 = k * k + k * epsilon
    cost = (1 + epsilon) * (1 + k**3 + epsilon * k * (1 + k))
    return mu1, mu2, y, cost
