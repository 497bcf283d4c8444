import pathlib

import numpy as np
import pytest

from wardrop_sense.model import Commodity, Edge, Instance, Network, PolynomialLatency
from wardrop_sense.tntp import read_instance

DATA = pathlib.Path(__file__).resolve().parents[1] / "data" / "SiouxFalls"
SF_NET = DATA / "SiouxFalls_net.tntp"
SF_TRIPS = DATA / "SiouxFalls_trips.tntp"

_acceptance_lines = []


@pytest.fixture(scope="session")
def sioux_falls():
    return read_instance(SF_NET, SF_TRIPS)


@pytest.fixture(scope="session")
def sioux_falls_single(sioux_falls):
    return Instance(sioux_falls.network, (Commodity(19, 2, 1000.0),))


def random_instance(rng, max_nodes=6, max_edges=10, max_commodities=3, max_degree=4):
    """Small random instance; a Hamiltonian cycle keeps every pair reachable."""
    n = int(rng.integers(2, max_nodes + 1))
    pairs = [(v, (v + 1) % n) for v in range(n)] if n > 2 else [(0, 1), (1, 0)]
    extra = int(rng.integers(0, max(max_edges - len(pairs), 0) + 1))
    for _ in range(extra):
        u, v = rng.integers(0, n, size=2)
        pairs.append((int(u), int(v)))
    edges = []
    for u, v in pairs:
        degree = int(rng.integers(0, max_degree + 1))
        coeffs = rng.uniform(0, 2, size=degree + 1) * (rng.random(degree + 1) < 0.7)
        coeffs[0] += 0.05
        edges.append(Edge(u, v, PolynomialLatency(tuple(coeffs))))
    commodities = []
    for _ in range(int(rng.integers(1, max_commodities + 1))):
        o, d = rng.choice(n, size=2, replace=False)
        commodities.append(Commodity(int(o), int(d), float(rng.uniform(0.1, 3.0))))
    return Instance(Network(n, tuple(edges)), tuple(commodities))


def record_acceptance(number, title, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    _acceptance_lines.append(f"[{status}] criterion {number}: {title} {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
