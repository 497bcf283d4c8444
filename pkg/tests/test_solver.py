import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_instance
from wardrop_sense.builtin import (PigouSpec, TwoCommoditySpec, gen_pigou, gen_two_commodity,
                                   two_commodity_ue_closed_form)
from wardrop_sense.model import Commodity, Instance, scale_demands, total_cost
from wardrop_sense.paths import shortest_paths
from wardrop_sense.solver import (Objective, SolverConfig, _Polynomials, line_search,
                                  relative_gap, solve)

UE = SolverConfig()
SO = SolverConfig(objective=Objective.SO)


def test_pigou_equilibrium():
    sol = solve(gen_pigou(PigouSpec(2)), UE)
    assert sol.converged is True and type(sol.relative_gap) is float
    assert sol.total_cost == pytest.approx(1.0, abs=1e-6)
    assert sol.mu[0] == pytest.approx(1.0, abs=1e-6)


def test_pigou_optimum_against_grid_search():
    p = 4
    sol = solve(gen_pigou(PigouSpec(p)), SO)
    grid = np.linspace(0, 1, 2_000_001)
    oracle = float(np.min(grid ** (p + 1) + (1 - grid)))
    assert oracle == pytest.approx(1 - 0.8 * 0.2**0.25, abs=1e-10)
    assert sol.total_cost == pytest.approx(oracle, abs=1e-8)
    assert sol.flows.edge_flows[0] == pytest.approx(0.2**0.25, abs=1e-6)


@pytest.mark.parametrize("method", ["fw", "pairwise"])
def test_two_commodity_diversion(method):
    k, eps = 2.0, 0.5
    inst = scale_demands(gen_two_commodity(TwoCommoditySpec(k)), eps)
    sol = solve(inst, SolverConfig(method=method, gap_tolerance=1e-10))
    mu1, mu2, y, cost = two_commodity_ue_closed_form(k, eps)
    assert sol.flows.edge_flows[1] == pytest.approx(y, abs=1e-6)
    assert sol.mu == pytest.approx([mu1, mu2], abs=1e-6)
    assert (mu1, mu2, y) == (2.0, 5.0, 0.5)
    assert sol.total_cost == pytest.approx(cost, rel=1e-8)


def test_relative_gap_examples():
    inst = gen_pigou(PigouSpec(1))
    assert relative_gap(inst, [0.0, 1.0]) == pytest.approx(1.0)
    assert relative_gap(inst, [1.0, 0.0]) == pytest.approx(0.0)
    empty = inst.with_demands([0.0])
    assert relative_gap(empty, [0.0, 0.0]) == 0.0
    sol = solve(empty)
    assert sol.converged and sol.total_cost == 0.0


@pytest.mark.parametrize("method", ["fw", "pairwise"])
@pytest.mark.parametrize("objective", list(Objective))
def test_objective_monotone_sioux_falls(sioux_falls_single, method, objective):
    cfg = SolverConfig(method=method, objective=objective, max_iterations=300, gap_tolerance=1e-6)
    trace = solve(sioux_falls_single, cfg).objective_trace
    steps = np.diff(trace)
    assert np.all(steps <= 1e-9 * abs(trace[0]))


def _variational_certificate(instance, sol, objective):
    """sum_e c_e(f) (g_e - f_e) >= 0 for the all-or-nothing competitor g."""
    poly = _Polynomials(instance, objective)
    x = sol.flows.edge_flows
    c = poly.costs(x)
    best = sum(d * shortest_paths(instance.network, c, com.origin).dist[com.destination]
               for d, com in zip(instance.demands, instance.commodities))
    return (best - float(np.dot(c, x))) / float(np.dot(c, x))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_instances(seed):
    inst = random_instance(np.random.default_rng(seed))
    ue, so = solve(inst, UE), solve(inst, SO)
    assert ue.converged and so.converged
    assert so.total_cost <= ue.total_cost * (1 + 1e-7) + 1e-12
    for sol, obj in ((ue, Objective.UE), (so, Objective.SO)):
        assert _variational_certificate(inst, sol, obj) >= -1e-7
        assert relative_gap(inst, sol.flows, obj) == pytest.approx(sol.relative_gap, abs=1e-12)
    assert ue.total_cost == pytest.approx(total_cost(inst, ue.flows), rel=1e-12)
    # plain Frank-Wolfe may stall, but its potential stays within the duality bound
    fw = solve(inst, SolverConfig(method="fw", gap_tolerance=1e-6, max_iterations=2000))
    excess = fw.objective_value - ue.objective_value
    assert excess >= -(abs(ue.relative_gap) + 1e-12) * ue.total_cost - 1e-12
    assert excess <= (abs(fw.relative_gap) + 1e-12) * fw.total_cost + 1e-12


def test_line_search_matches_dense_grid(rng):
    inst = random_instance(rng, max_nodes=5, max_edges=8)
    poly = _Polynomials(inst, Objective.UE)
    for _ in range(20):
        x = rng.uniform(0, 2, size=inst.network.edge_count)
        d = rng.uniform(-1, 1, size=x.size) * (rng.random(x.size) < 0.8)
        amax = float(np.min(np.where(d < 0, x / np.maximum(-d, 1e-300), np.inf), initial=1.0))
        alpha = line_search(poly, x, d, amax, 1e-12)
        grid = np.linspace(0, amax, 20001)
        values = [poly.objective(np.maximum(x + a * d, 0)) for a in grid]
        assert poly.objective(np.maximum(x + alpha * d, 0)) <= min(values) + 1e-10


def test_iteration_cap_reports_not_converged(sioux_falls):
    sol = solve(sioux_falls, SolverConfig(max_iterations=1))
    assert not sol.converged
    assert sol.iterations == 1
    assert sol.relative_gap > SolverConfig().gap_tolerance


def test_sioux_falls_full_demand(sioux_falls):
    ue = solve(sioux_falls, UE)
    assert ue.converged
    assert ue.total_cost == pytest.approx(7480224.6, rel=1e-6)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(gap_tolerance=0)
    with pytest.raises(ValueError):
        SolverConfig(max_iterations=0)
    with pytest.raises(ValueError):
        SolverConfig(method="msa")
    assert dataclasses.replace(UE, objective="so").objective is Objective.SO
