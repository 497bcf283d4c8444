"""Command-line front end: ``wardrop-sense {solve,sweep,check,gen}``.

Exit codes: 0 success, 1 input or usage error, 2 solver did not converge
(``solve`` only), 3 a bound inequality failed (``check`` only).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import pathlib
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .builtin import PigouSpec, TwoCommoditySpec, gen_pigou, gen_two_commodity
from .model import Commodity, InfeasibleInstanceError, Instance
from .sensitivity import BOUND_KEYS, BoundReport, check_pair, sweep
from .solver import Objective, Solution, SolverConfig, solve
from .tntp import (TntpError, format_real, parse_net, parse_trips, sweep_csv, sweep_json,
                   write_net, write_trips)

log = logging.getLogger("wardrop_sense")

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_BOUND_FAILED = 0, 1, 2, 3


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


@dataclass
class RunManifest:
    subcommand: str
    inputs: dict
    parameters: dict
    solver_config: dict
    output: str | None
    tool_version: str = __version__
    wall_clock_seconds: float = 0.0


def _add_instance_args(p: argparse.ArgumentParser, allow_od: bool = False) -> None:
    p.add_argument("--net", type=pathlib.Path, help="TNTP network file")
    p.add_argument("--trips", type=pathlib.Path, help="TNTP trips file")
    p.add_argument("--example", choices=("pigou", "two-commodity"))
    p.add_argument("--p", type=int, default=4, help="Pigou degree (default 4)")
    p.add_argument("--k", type=float, default=2.0, help="two-commodity k (default 2)")
    p.add_argument("--demand", type=float,
                   help="demand of the --od commodity, or Pigou demand (default 1)")
    p.add_argument("--demand-scale", type=float, default=1.0,
                   help="multiply every demand by this factor first")
    if allow_od:
        p.add_argument("--od", type=int, nargs=2, metavar=("O", "D"),
                       help="keep a single 1-based origin-destination pair")


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gap-tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=20000)
    p.add_argument("--method", choices=("pairwise", "fw"), default="pairwise")


def _add_output_args(p: argparse.ArgumentParser, formats=("csv", "json")) -> None:
    p.add_argument("--format", choices=formats, default=formats[0])
    p.add_argument("--out", type=pathlib.Path, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wardrop-sense", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve one instance for UE or SO")
    _add_instance_args(p, allow_od=True)
    p.add_argument("--objective", choices=("ue", "so"), required=True)
    _add_solver_args(p)
    _add_output_args(p)

    p = sub.add_parser("sweep", help="repeatedly scale demand and check each step")
    _add_instance_args(p, allow_od=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    _add_solver_args(p)
    _add_output_args(p)

    p = sub.add_parser("check", help="evaluate every bound for one demand increase")
    _add_instance_args(p, allow_od=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--eps", type=float)
    group.add_argument("--eps-grid", metavar="START:STOP:COUNT")
    _add_solver_args(p)
    _add_output_args(p, formats=("table", "json"))

    p = sub.add_parser("gen", help="write a built-in example as TNTP files")
    p.add_argument("--example", choices=("pigou", "two-commodity"), required=True)
    p.add_argument("--p", type=int, default=4)
    p.add_argument("--k", type=float, default=2.0)
    p.add_argument("--demand", type=float, default=1.0)
    p.add_argument("--out", type=pathlib.Path, required=True, help="output directory")
    return parser


def _load_instance(args, parser) -> tuple[Instance, dict]:
    od = getattr(args, "od", None)
    if args.example:
        if args.net or args.trips or od:
            parser.error("--example cannot be combined with --net/--trips/--od")
        if args.example == "pigou":
            instance = gen_pigou(PigouSpec(args.p, 1.0 if args.demand is None else args.demand))
        else:
            instance = gen_two_commodity(TwoCommoditySpec(args.k))
        inputs = {"example": args.example, "p": args.p, "k": args.k}
    else:
        if args.net is None:
            parser.error("either --example or --net is required")
        if od is None and args.trips is None:
            parser.error("--trips is required unless --od is given")
        if od is not None and args.demand is None:
            parser.error("--od requires an explicit --demand")
        if od is None and args.demand is not None:
            parser.error("--demand applies only to --od or --example pigou")
        instance = _read_files(args.net, args.trips, od, args.demand)
        inputs = {"net": str(args.net), "trips": str(args.trips) if args.trips else None,
                  "od": od}
    if not args.demand_scale > 0:
        parser.error("--demand-scale must be positive")
    if args.demand_scale != 1.0:
        instance = instance.with_demands(instance.demands * args.demand_scale)
    return instance, inputs


def _read_files(net, trips, od, demand) -> Instance:
    def read(path):
        try:
            return pathlib.Path(path).read_text()
        except OSError as exc:
            raise InputError(f"{path}: {exc.strerror or exc}") from None

    network = parse_net(read(net), str(net))
    if od is None:
        commodities = parse_trips(read(trips), str(trips))
    else:
        o, d = od
        if not (1 <= o <= network.node_count and 1 <= d <= network.node_count):
            raise InputError(f"--od {o} {d}: nodes must lie in 1..{network.node_count}")
        if not demand >= 0:
            raise InputError("--demand must be nonnegative")
        commodities = [Commodity(o - 1, d - 1, demand)]
    for c in commodities:
        if c.origin >= network.node_count or c.destination >= network.node_count:
            raise InputError(f"{trips}: commodity references node outside the network")
    return Instance(network, tuple(commodities))


def _solver_config(args, parser, objective=Objective.UE) -> SolverConfig:
    if not args.gap_tol > 0:
        parser.error("--gap-tol must be positive")
    if args.max_iter < 1:
        parser.error("--max-iter must be >= 1")
    return SolverConfig(gap_tolerance=args.gap_tol, max_iterations=args.max_iter,
                        objective=objective, method=args.method)


def _emit(text: str, out: pathlib.Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(text.encode())


def _write_manifest(manifest: RunManifest, out: pathlib.Path | None) -> None:
    text = json.dumps(dataclasses.asdict(manifest), indent=1, default=str) + "\n"
    if out is None:
        sys.stderr.write(text)
    else:
        pathlib.Path(str(out) + ".manifest.json").write_text(text)


def _solution_text(instance: Instance, sol: Solution, fmt: str) -> str:
    summary = {
        "objective": sol.objective.value,
        "total_cost": sol.total_cost,
        "objective_value": sol.objective_value,
        "relative_gap": sol.relative_gap,
        "iterations": sol.iterations,
        "converged": sol.converged,
    }
    rows = [
        {"origin": c.origin + 1, "destination": c.destination + 1, "demand": c.demand,
         "mu": float(mu)}
        for c, mu in zip(instance.commodities, sol.mu)
    ]
    if fmt == "json":
        edges = [
            {"tail": e.tail + 1, "head": e.head + 1, "flow": float(x)}
            for e, x in zip(instance.network.edges, sol.flows.edge_flows)
        ]
        return json.dumps({**summary, "commodities": rows, "edge_flows": edges}, indent=1) + "\n"
    header = ["origin", "destination", "demand", "mu", *summary]
    lines = [",".join(header)]
    tail = [format_real(v) if not isinstance(v, str) else v for v in summary.values()]
    for r in rows:
        lines.append(",".join([format_real(v) for v in r.values()] + tail))
    return "\n".join(lines) + "\n"


def cmd_solve(args, parser):
    instance, inputs = _load_instance(args, parser)
    config = _solver_config(args, parser, Objective(args.objective))
    sol = solve(instance, config)
    _emit(_solution_text(instance, sol, args.format), args.out)
    if not sol.converged:
        log.warning("not converged: relative gap %.3e after %d iterations",
                    sol.relative_gap, sol.iterations)
    return EXIT_OK if sol.converged else EXIT_NOT_CONVERGED, inputs, config


def cmd_sweep(args, parser):
    if args.steps < 1:
        parser.error("--steps must be >= 1")
    if not args.eps > 0:
        parser.error("--eps must be positive")
    instance, inputs = _load_instance(args, parser)
    config = _solver_config(args, parser)
    records = sweep(instance, args.eps, args.steps, config)
    text = sweep_json(records) if args.format == "json" else sweep_csv(records)
    _emit(text, args.out)
    for r in records:
        if not r.converged:
            log.warning("step %d did not converge", r.step)
    return EXIT_OK, inputs, config


def _eps_values(args, parser) -> list[float]:
    if args.eps is not None:
        values = [args.eps]
    else:
        try:
            start, stop, count = args.eps_grid.split(":")
            values = list(np.linspace(float(start), float(stop), int(count)))
        except ValueError:
            parser.error("--eps-grid must look like START:STOP:COUNT")
        if not values:
            parser.error("--eps-grid needs COUNT >= 1")
    if any(not (v >= 0 and math.isfinite(v)) for v in values):
        parser.error("epsilon must be >= 0")
    return [float(v) for v in values]


def _report_table(reports: list[BoundReport]) -> str:
    if len(reports) == 1:
        r = reports[0]
        lines = [
            f"epsilon={format_real(r.epsilon)} p={r.p} converged={r.converged}",
            f"C(f)={format_real(r.C_f)} C(f')={format_real(r.C_fp)} "
            f"C_opt={format_real(r.C_opt)} C'_opt={format_real(r.C_opt_p)}",
            f"rho={format_real(r.rho)} rho'={format_real(r.rho_p)} ratio={format_real(r.ratio)}",
            f"{'inequality':<14}{'slack':>22}{'scale':>22}  holds",
        ]
        for key in BOUND_KEYS:
            lines.append(f"{key:<14}{format_real(r.slacks[key]):>22}"
                         f"{format_real(r.scales[key]):>22}  {'yes' if r.holds[key] else 'NO'}")
        return "\n".join(lines) + "\n"
    cols = ["epsilon", "C_f", "C_fp", "C_opt", "C_opt_p", "rho", "rho_p", "ratio",
            "dafermos_lhs", "all_hold", "converged"]
    lines = [",".join(cols)]
    for r in reports:
        lines.append(",".join(format_real(getattr(r, c)) for c in cols))
    return "\n".join(lines) + "\n"


def cmd_check(args, parser):
    eps_values = _eps_values(args, parser)
    instance, inputs = _load_instance(args, parser)
    config = _solver_config(args, parser)
    reports = [check_pair(instance, eps, config) for eps in eps_values]
    if args.format == "json":
        _emit(json.dumps([r.to_dict() for r in reports], indent=1) + "\n", None)
    else:
        _emit(_report_table(reports), None)
    if args.out is not None:
        _emit(json.dumps([r.to_dict() for r in reports], indent=1) + "\n", args.out)
    ok = all(r.all_hold for r in reports)
    return (EXIT_OK if ok else EXIT_BOUND_FAILED), inputs, config


def cmd_gen(args, parser):
    if args.example == "pigou":
        instance = gen_pigou(PigouSpec(args.p, args.demand))
        name = f"pigou_p{args.p}"
    else:
        instance = gen_two_commodity(TwoCommoditySpec(args.k))
        name = f"two_commodity_k{format_real(args.k)}"
    args.out.mkdir(parents=True, exist_ok=True)
    net_path = args.out / f"{name}_net.tntp"
    trips_path = args.out / f"{name}_trips.tntp"
    args.manifest_base = args.out / name
    net_path.write_text(write_net(instance.network))
    trips_path.write_text(write_trips(instance.commodities, instance.network.node_count))
    print(net_path, file=sys.stderr)
    print(trips_path, file=sys.stderr)
    return EXIT_OK, {"example": args.example}, None


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "check": cmd_check, "gen": cmd_gen}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    started = time.perf_counter()
    try:
        code, inputs, config = COMMANDS[args.command](args, parser)
    except (InputError, TntpError, InfeasibleInstanceError, ValueError) as exc:
        print(f"wardrop-sense: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    params = {k: (str(v) if isinstance(v, pathlib.Path) else v) for k, v in vars(args).items()
              if k not in ("net", "trips", "out", "verbose", "command")}
    manifest = RunManifest(
        subcommand=args.command,
        inputs=inputs,
        parameters=params,
        solver_config=dataclasses.asdict(config) if config else {},
        output=str(args.out) if args.out else None,
        wall_clock_seconds=time.perf_counter() - started,
    )
    _write_manifest(manifest, getattr(args, "manifest_base", args.out))
    return code


if __name__ == "__main__":
    sys.exit(main())
