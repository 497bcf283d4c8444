import numpy as np
import pytest

from wardrop_sense.builtin import (PigouSpec, TwoCommoditySpec, gen_pigou, gen_two_commodity,
                                   pigou_poa_closed_form, pigou_so_flow, worst_case_poa,
                                   two_commodity_ue_closed_form)
from wardrop_sense.model import scale_demands
from wardrop_sense.sensitivity import check_pair, price_of_anarchy
from wardrop_sense.solver import SolverConfig, solve


def test_generators():
    pig = gen_pigou(PigouSpec(3, 2.0))
    assert [e.latency.coefficients for e in pig.network.edges] == [(0, 0, 0, 1.0), (1.0,)]
    assert pig.demands.tolist() == [2.0]
    tc = gen_two_commodity(TwoCommoditySpec(2.0))
    assert [(e.tail, e.head) for e in tc.network.edges] == [(0, 1), (1, 2), (0, 2)]
    assert tc.network.edges[1].latency.coefficients == (3.0,)
    assert tc.demands.tolist() == [1.0, 2.0]
    with pytest.raises(ValueError):
        PigouSpec(0)
    with pytest.raises(ValueError):
        TwoCommoditySpec(0.5)


def test_closed_form_values():
    assert pigou_poa_closed_form(1, 0.0) == pytest.approx(4 / 3)
    for p in range(1, 9):
        assert pigou_poa_closed_form(p, 0.0) == pytest.approx(worst_case_poa(p), rel=1e-14)
    assert pigou_so_flow(4) == pytest.approx(0.2**0.25)
    assert two_commodity_ue_closed_form(2.0, 0.5) == (2.0, 5.0, 0.5, 18.0)


@pytest.mark.parametrize("p", [1, 2, 3, 4])
@pytest.mark.parametrize("eps", [0.0, 0.1, 0.5, 2.0])
def test_pigou_solver_matches_closed_form(p, eps):
    rho, ue, so = price_of_anarchy(gen_pigou(PigouSpec(p, 1 + eps)), workers=1)
    assert rho == pytest.approx(pigou_poa_closed_form(p, eps), rel=1e-6)
    assert so.flows.edge_flows[0] == pytest.approx(pigou_so_flow(p), abs=1e-6)


@pytest.mark.parametrize("k", [1.0, 1.5, 2.0, 5.0])
@pytest.mark.parametrize("eps", [0.0, 0.1, 0.5, 1.0])
def test_two_commodity_solver_matches_closed_form(k, eps):
    inst = scale_demands(gen_two_commodity(TwoCommoditySpec(k)), eps)
    sol = solve(inst, SolverConfig(gap_tolerance=1e-10))
    mu1, mu2, y, cost = two_commodity_ue_closed_form(k, eps)
    assert sol.mu == pytest.approx([mu1, mu2], rel=1e-6)
    assert sol.flows.edge_flows[1] == pytest.approx(y, abs=1e-5 * (1 + k))
    assert sol.total_cost == pytest.approx(cost, rel=1e-8)


@pytest.mark.parametrize("k", [1.0, 1.5, 2.0, 5.0])
def test_two_commodity_cost_band(k):
    eps = 0.5
    report = check_pair(gen_two_commodity(TwoCommoditySpec(k)), eps, workers=1)
    assert report.all_hold
    ratio = report.C_fp / report.C_f
    assert 1 + eps - 1e-9 <= ratio <= (1 + eps) ** 2 + 1e-9
    assert report.C_f == pytest.approx(1 + k**3)


def test_pigou_grid_closed_form_monotone():
    for p in (1, 4):
        values = [pigou_poa_closed_form(p, e) for e in np.linspace(0, 3, 31)]
        assert all(b < a for a, b in zip(values, values[1:]))
