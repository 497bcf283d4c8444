"""Price of anarchy under uniform demand scaling.

Given solved user-equilibrium and system-optimum flows at demands ``d`` and
``(1 + eps) d``, :func:`evaluate_bounds` measures the slack of every
inequality that relates the two instances:

=========  ================================================================
key        inequality (slack = right side minus left side, or vice versa)
=========  ================================================================
thm1       ``C(f) <= C'_opt / eps``
thm3       ``C(f) <= C'_opt / ((1 + eps) - kappa(p))``
thm4       ``sum_i (mu_i(f') - mu_i(f)) (d'_i - d_i) >= 0``
thm5_lo    ``(1 + eps) C_opt <= C'_opt``
thm5_hi    ``C'_opt <= (1 + eps)**(p+1) C_opt``
thm6_lo    ``(1 + eps) C(f) <= C(f')``
thm6_hi    ``C(f') <= (1 + eps)**(p+1) C(f)``
thm7_lo    ``(1 + eps)**-p <= rho' / rho``
thm7_hi    ``rho' / rho <= (1 + eps)**p``
cap        ``rho, rho' <= cap(p)`` and ``1/cap(p) <= rho'/rho <= cap(p)``
=========  ================================================================

with ``kappa(p) = p / (p + 1)**(1 + 1/p)`` and ``cap`` the worst-case
price of anarchy for degree-``p`` polynomials.
"""
from __future__ import annotations

import dataclasses
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .builtin import worst_case_poa
from .model import Instance, PolynomialLatency, eval_latency, scale_demands
from .solver import Objective, Solution, SolverConfig, solve
from .tntp import SweepRecord

BOUND_KEYS = (
    "thm1", "thm3", "thm4", "thm5_lo", "thm5_hi", "thm6_lo", "thm6_hi",
    "thm7_lo", "thm7_hi", "cap_rho", "cap_rho_p", "cap_ratio_lo", "cap_ratio_hi",
)


def kappa(p: int) -> float:
    """``p / (p + 1)**(1 + 1/p)``, taken as 0 at ``p = 0`` (its limit)."""
    if p < 0:
        raise ValueError("p must be >= 0")
    if p == 0:
        return 0.0
    return p / (p + 1) ** (1 + 1 / p)


def effective_epsilon_max(p: int) -> float:
    """Demand growth beyond which ``(1 + eps)**p`` exceeds the PoA cap."""
    if p < 1:
        raise ValueError("effective epsilon is undefined for p < 1")
    return worst_case_poa(p) ** (1 / p) - 1


def christodoulou_check(latency: PolynomialLatency, f_e: float, fp_e: float, p: int) -> float:
    """Slack of ``l(f) f' <= kappa(p) l(f) f + l(f') f'``; nonnegative when degree <= p."""
    lf = eval_latency(latency, f_e)
    return kappa(p) * lf * f_e + eval_latency(latency, fp_e) * fp_e - lf * fp_e


def dafermos_lhs(instance_low: Instance, mu_low: Sequence[float], mu_high: Sequence[float],
                 epsilon: float) -> float:
    d = instance_low.demands
    mu_low, mu_high = np.asarray(mu_low, float), np.asarray(mu_high, float)
    if not (len(mu_low) == len(mu_high) == len(d)):
        raise ValueError("mu sequences must align with commodities")
    return float(epsilon * np.dot(mu_high - mu_low, d))


@dataclass
class BoundReport:
    epsilon: float
    p: int
    C_f: float
    C_fp: float
    C_opt: float
    C_opt_p: float
    rho: float
    rho_p: float
    dafermos_lhs: float
    slacks: dict[str, float]
    scales: dict[str, float]
    holds: dict[str, bool]
    converged: bool
    gaps: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    @property
    def ratio(self) -> float:
        return self.rho_p / self.rho

    @property
    def all_hold(self) -> bool:
        return all(self.holds.values())

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["ratio"] = self.ratio
        out["all_hold"] = self.all_hold
        return _finite_or_none(out)


def _finite_or_none(obj):
    if isinstance(obj, dict):
        return {k: _finite_or_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_none(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _poa(ue_cost: float, so_cost: float) -> float:
    return 1.0 if so_cost <= 0 else ue_cost / so_cost


def evaluate_bounds(instance_low: Instance, epsilon: float,
                    ue_low: Solution, so_low: Solution,
                    ue_high: Solution, so_high: Solution,
                    gap_tolerance: float = 1e-8, p: int | None = None) -> BoundReport:
    """Slack of every cross-instance inequality for one solved pair."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    p = instance_low.degree if p is None else p
    g = 1 + epsilon
    C_f, C_fp = ue_low.total_cost, ue_high.total_cost
    C_opt, C_opt_p = so_low.total_cost, so_high.total_cost
    rho, rho_p = _poa(C_f, C_opt), _poa(C_fp, C_opt_p)
    ratio = rho_p / rho
    cap = worst_case_poa(p)
    lhs4 = dafermos_lhs(instance_low, ue_low.mu, ue_high.mu, epsilon)
    scale4 = float(epsilon * np.dot(np.abs(ue_high.mu) + np.abs(ue_low.mu), instance_low.demands))

    # (smaller side, larger side) pairs; slack = larger - smaller
    sides = {
        "thm1": (C_f, C_opt_p / epsilon if epsilon > 0 else math.inf),
        "thm3": (C_f, C_opt_p / (g - kappa(p))),
        "thm5_lo": (g * C_opt, C_opt_p),
        "thm5_hi": (C_opt_p, g ** (p + 1) * C_opt),
        "thm6_lo": (g * C_f, C_fp),
        "thm6_hi": (C_fp, g ** (p + 1) * C_f),
        "thm7_lo": (g ** -p, ratio),
        "thm7_hi": (ratio, g ** p),
        "cap_rho": (rho, cap),
        "cap_rho_p": (rho_p, cap),
        "cap_ratio_lo": (1 / cap, ratio),
        "cap_ratio_hi": (ratio, cap),
    }
    rel = 10 * gap_tolerance
    slacks, scales, holds = {}, {}, {}
    for key in BOUND_KEYS:
        if key == "thm4":
            slack, scale = lhs4, scale4
        else:
            small, large = sides[key]
            slack = large - small
            scale = max(abs(small), abs(large)) if math.isfinite(large) else abs(small)
        tol = rel * scale if scale > 0 else 1e-12
        slacks[key] = slack
        scales[key] = scale
        holds[key] = bool(slack >= -tol)
    return BoundReport(
        epsilon=epsilon, p=p, C_f=C_f, C_fp=C_fp, C_opt=C_opt, C_opt_p=C_opt_p,
        rho=rho, rho_p=rho_p, dafermos_lhs=lhs4, slacks=slacks, scales=scales, holds=holds,
        converged=all(s.converged for s in (ue_low, so_low, ue_high, so_high)),
        gaps=tuple(s.relative_gap for s in (ue_low, so_low, ue_high, so_high)),
    )


def worker_count() -> int:
    """Worker cap from ``WARDROP_SENSE_THREADS`` (0 or unset: one per CPU)."""
    raw = os.environ.get("WARDROP_SENSE_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"WARDROP_SENSE_THREADS must be an integer, got {raw!r}") from None
    return n if n > 0 else (os.cpu_count() or 1)


def _solve_job(job):
    instance, config = job
    return solve(instance, config)


def solve_many(jobs: Sequence[tuple[Instance, SolverConfig]], workers: int | None = None) -> list[Solution]:
    """Solve independent instances, results in job order."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [_solve_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_solve_job, jobs))


def _both(config: SolverConfig) -> tuple[SolverConfig, SolverConfig]:
    return (dataclasses.replace(config, objective=Objective.UE),
            dataclasses.replace(config, objective=Objective.SO))


def price_of_anarchy(instance: Instance, config: SolverConfig = SolverConfig(),
                     workers: int | None = None) -> tuple[float, Solution, Solution]:
    ue_cfg, so_cfg = _both(config)
    ue, so = solve_many([(instance, ue_cfg), (instance, so_cfg)], workers)
    return _poa(ue.total_cost, so.total_cost), ue, so


def check_pair(instance: Instance, epsilon: float, config: SolverConfig = SolverConfig(),
               workers: int | None = None) -> BoundReport:
    """Solve UE and SO at ``d`` and ``(1 + epsilon) d`` and evaluate every bound."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    high = scale_demands(instance, epsilon)
    ue_cfg, so_cfg = _both(config)
    ue_lo, so_lo, ue_hi, so_hi = solve_many(
        [(instance, ue_cfg), (instance, so_cfg), (high, ue_cfg), (high, so_cfg)], workers)
    return evaluate_bounds(instance, epsilon, ue_lo, so_lo, ue_hi, so_hi, config.gap_tolerance)


def sweep(instance: Instance, epsilon: float, steps: int, config: SolverConfig = SolverConfig(),
          workers: int | None = None) -> list[SweepRecord]:
    """Scale demands by ``1 + epsilon`` ``steps`` times, checking each consecutive pair.

    Record 0 is the base instance; record ``j`` carries the bound slacks of
    the pair (record ``j-1``, record ``j``) and keeps its full report in
    ``record.report``.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    instances = [instance]
    multipliers = [1.0]
    for _ in range(steps):
        instances.append(scale_demands(instances[-1], epsilon))
        multipliers.append(multipliers[-1] * (1 + epsilon))
    ue_cfg, so_cfg = _both(config)
    jobs = [(inst, cfg) for inst in instances for cfg in (ue_cfg, so_cfg)]
    solutions = solve_many(jobs, workers)
    ues, sos = solutions[0::2], solutions[1::2]

    records = []
    for j, (ue, so) in enumerate(zip(ues, sos)):
        rec = SweepRecord(step=j, multiplier=multipliers[j], ue_cost=ue.total_cost,
                          so_cost=so.total_cost, poa=_poa(ue.total_cost, so.total_cost),
                          converged=ue.converged and so.converged)
        if j:
            report = evaluate_bounds(instances[j - 1], epsilon, ues[j - 1], sos[j - 1], ue, so,
                                     config.gap_tolerance)
            rec.report = report
            rec.poa_ratio = report.ratio
            rec.dafermos_lhs = report.dafermos_lhs
            for key in ("thm5_lo", "thm5_hi", "thm6_lo", "thm6_hi", "thm7_lo", "thm7_hi"):
                setattr(rec, f"{key}_slack", report.slacks[key])
        records.append(rec)
    return records


@dataclass
class TightnessDiagnostic:
    lemma: int
    offending_edges: list[tuple[int, str]] = field(default_factory=list)
    note: str = ""

    @property
    def bound_attainable(self) -> bool:
        return not self.offending_edges


_LEMMA_NOTES = {
    5: "lower bound of (1+eps) C_opt <= C'_opt needs constant latency on every edge used by f'*",
    6: "upper bound C(f') <= (1+eps)^(p+1) C(f) needs degree-p latency on every edge used by "
       "f or f' (necessary under the monomial-latency analysis)",
    7: "upper bound C'_opt <= (1+eps)^(p+1) C_opt needs degree-p latency on every edge used by f*",
    8: "lower bound (1+eps) C(f) <= C(f') needs constant latency on every edge whose flow changes",
}


def tightness_diagnostics(lemma_id: int, instance: Instance, ue_low: Solution, ue_high: Solution,
                          so_low: Solution, so_high: Solution,
                          flow_tol: float | None = None) -> TightnessDiagnostic:
    """List edges that rule out equality in one of the cost sandwiches."""
    if lemma_id not in _LEMMA_NOTES:
        raise ValueError(f"unknown lemma id {lemma_id!r}; expected one of 5, 6, 7, 8")
    if flow_tol is None:
        flow_tol = 1e-6 * max(float(instance.demands.max(initial=0.0)), 1e-300)
    if not flow_tol > 0:
        raise ValueError("flow_tol must be positive")
    p = instance.degree
    edges = instance.network.edges
    f, fp = ue_low.flows.edge_flows, ue_high.flows.edge_flows
    fs, fps = so_low.flows.edge_flows, so_high.flows.edge_flows
    offending = []
    for eid, e in enumerate(edges):
        lat = e.latency
        top = lat.coefficients[p] if len(lat.coefficients) > p else 0.0
        if lemma_id == 5 and fps[eid] > flow_tol and not lat.is_constant():
            offending.append((eid, "used by scaled optimum but latency not constant"))
        elif lemma_id == 6 and (f[eid] > flow_tol or fp[eid] > flow_tol) and not top > 0:
            offending.append((eid, f"used by an equilibrium but latency degree {lat.degree} < {p}"))
        elif lemma_id == 7 and fs[eid] > flow_tol and not top > 0:
            offending.append((eid, f"used by base optimum but latency degree {lat.degree} < {p}"))
        elif lemma_id == 8 and abs(fp[eid] - f[eid]) > flow_tol and not lat.is_constant():
            offending.append((eid, "equilibrium flow changes but latency not constant"))
    return TightnessDiagnostic(lemma_id, offending, _LEMMA_NOTES[lemma_id])
