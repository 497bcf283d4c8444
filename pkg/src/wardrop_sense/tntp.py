"""TNTP network/trips parsing and CSV/JSON emission of sweep results.

Net rows are BPR links ``fft * (1 + b * (x / capacity)**power)`` and are
expanded into polynomial coefficients. Files written by :func:`write_net`
for the built-in examples carry the extra metadata tag
``<LATENCY FORM> ABSOLUTE``, under which a row means ``fft + b * x**power``
(capacity ignored); plain BPR cannot express monomials with zero free-flow
time.
"""
from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

from .model import Commodity, Edge, Instance, Network, PolynomialLatency


class TntpError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class UnsupportedLatencyError(TntpError):
    pass


class IntegrityError(TntpError):
    pass


@dataclass(frozen=True)
class BprRow:
    tail: int
    head: int
    capacity: float
    free_flow_time: float
    b_factor: float
    power: int

    def latency(self, absolute: bool = False) -> PolynomialLatency:
        if absolute:
            coeffs = [0.0] * (self.power + 1)
            coeffs[0] += self.free_flow_time
            coeffs[self.power] += self.b_factor
            return PolynomialLatency(tuple(coeffs))
        return PolynomialLatency.bpr(self.free_flow_time, self.b_factor, self.capacity, self.power)


_META = re.compile(r"^<([^>]+)>\s*(.*)$")


def _split_metadata(text: str, source: str | None):
    meta: dict[str, str] = {}
    lines = text.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("~"):
            continue
        match = _META.match(line)
        if not match:
            raise TntpError("data before <END OF METADATA>", lineno, source)
        key = match.group(1).strip().upper()
        if key == "END OF METADATA":
            return meta, list(enumerate(lines[lineno:], start=lineno + 1))
        meta[key] = match.group(2).strip()
    raise TntpError("missing <END OF METADATA>", len(lines), source)


def _int_meta(meta: dict[str, str], key: str, source: str | None) -> int:
    if key not in meta:
        raise TntpError(f"missing metadata <{key}>", 1, source)
    try:
        return int(float(meta[key]))
    except ValueError:
        raise TntpError(f"bad value for <{key}>: {meta[key]!r}", 1, source) from None


def parse_bpr_rows(text: str, source: str | None = None) -> tuple[dict[str, str], list[BprRow]]:
    meta, body = _split_metadata(text, source)
    absolute = meta.get("LATENCY FORM", "").upper() == "ABSOLUTE"
    rows = []
    for lineno, raw in body:
        line = raw.strip()
        if not line or line.startswith("~"):
            continue
        fields = line.rstrip(";").split()
        if len(fields) < 7:
            raise TntpError(f"expected at least 7 columns, got {len(fields)}", lineno, source)
        try:
            tail, head = int(fields[0]), int(fields[1])
            capacity, fft, b = float(fields[2]), float(fields[4]), float(fields[5])
            power_raw = float(fields[6])
        except ValueError as exc:
            raise TntpError(f"malformed link row ({exc})", lineno, source) from None
        if not power_raw.is_integer() or power_raw < 0:
            raise UnsupportedLatencyError(
                f"BPR power {fields[6]} is not a nonnegative integer", lineno, source)
        power = int(power_raw)
        if fft < 0 or b < 0:
            raise TntpError("negative free-flow time or b factor", lineno, source)
        if not absolute and b > 0 and power > 0 and not capacity > 0:
            raise TntpError("capacity must be positive", lineno, source)
        rows.append(BprRow(tail, head, capacity, fft, b, power))
    return meta, rows


def parse_net(text: str, source: str | None = None) -> Network:
    """Parse a TNTP ``_net.tntp`` file; node ids become 0-based."""
    meta, rows = parse_bpr_rows(text, source)
    n = _int_meta(meta, "NUMBER OF NODES", source)
    m = _int_meta(meta, "NUMBER OF LINKS", source)
    _int_meta(meta, "FIRST THRU NODE", source)
    if len(rows) != m:
        raise IntegrityError(f"metadata declares {m} links but {len(rows)} rows found",
                             None, source)
    absolute = meta.get("LATENCY FORM", "").upper() == "ABSOLUTE"
    edges = []
    for k, row in enumerate(rows):
        if not (1 <= row.tail <= n and 1 <= row.head <= n):
            raise IntegrityError(f"link {k + 1} references a node outside 1..{n}", None, source)
        edges.append(Edge(row.tail - 1, row.head - 1, row.latency(absolute)))
    return Network(n, tuple(edges))


def parse_trips(text: str, source: str | None = None) -> list[Commodity]:
    """Parse a TNTP ``_trips.tntp`` file into positive-demand commodities."""
    _, body = _split_metadata(text, source)
    commodities = []
    origin = None
    for lineno, raw in body:
        line = raw.strip()
        if not line or line.startswith("~"):
            continue
        if line.lower().startswith("origin"):
            parts = line.split()
            try:
                origin = int(parts[1])
            except (IndexError, ValueError):
                raise TntpError("malformed Origin line", lineno, source) from None
            continue
        if origin is None:
            raise TntpError("destination entries before any Origin line", lineno, source)
        for entry in line.split(";"):
            entry = entry.strip()
            if not entry:
                continue
            parts = entry.split(":")
            if len(parts) != 2:
                raise TntpError(f"malformed entry {entry!r}", lineno, source)
            try:
                dest, flow = int(parts[0]), float(parts[1])
            except ValueError:
                raise TntpError(f"malformed entry {entry!r}", lineno, source) from None
            if flow < 0 or not math.isfinite(flow):
                raise TntpError(f"invalid demand {flow!r}", lineno, source)
            if flow > 0 and dest != origin:
                commodities.append(Commodity(origin - 1, dest - 1, flow))
    return commodities


def read_instance(net_path, trips_path) -> Instance:
    with open(net_path) as fh:
        network = parse_net(fh.read(), str(net_path))
    with open(trips_path) as fh:
        commodities = parse_trips(fh.read(), str(trips_path))
    for c in commodities:
        if c.origin >= network.node_count or c.destination >= network.node_count:
            raise IntegrityError("trips reference node outside the network", None, str(trips_path))
    return Instance(network, tuple(commodities))


def write_net(network: Network) -> str:
    """Serialise a network whose latencies have at most one non-constant term."""
    out = [
        f"<NUMBER OF ZONES> {network.node_count}\n",
        f"<NUMBER OF NODES> {network.node_count}\n",
        "<FIRST THRU NODE> 1\n",
        f"<NUMBER OF LINKS> {network.edge_count}\n",
        "<LATENCY FORM> ABSOLUTE\n",
        "<END OF METADATA>\n\n",
        "~\tinit_node\tterm_node\tcapacity\tlength\tfree_flow_time\tb\tpower\tspeed\ttoll\tlink_type\t;\n",
    ]
    for k, e in enumerate(network.edges):
        coeffs = e.latency.coefficients
        terms = [m for m, c in enumerate(coeffs) if m > 0 and c > 0]
        if len(terms) > 1:
            raise UnsupportedLatencyError(f"edge {k} has more than one non-constant term")
        power = terms[0] if terms else 0
        b = coeffs[power] if terms else 0.0
        out.append(f"\t{e.tail + 1}\t{e.head + 1}\t1.0\t0.0\t{coeffs[0]!r}\t{b!r}\t{power}\t0\t0\t1\t;\n")
    return "".join(out)


def write_trips(commodities: Sequence[Commodity], zones: int) -> str:
    total = sum(c.demand for c in commodities)
    out = [f"<NUMBER OF ZONES> {zones}\n", f"<TOTAL OD FLOW> {total!r}\n", "<END OF METADATA>\n\n"]
    by_origin: dict[int, list[Commodity]] = {}
    for c in commodities:
        by_origin.setdefault(c.origin, []).append(c)
    for origin in sorted(by_origin):
        out.append(f"Origin {origin + 1}\n")
        out.append("".join(f"    {c.destination + 1} : {c.demand!r};" for c in by_origin[origin]) + "\n\n")
    return "".join(out)


SWEEP_COLUMNS = (
    "step", "multiplier", "ue_cost", "so_cost", "poa", "poa_ratio",
    "thm5_lo_slack", "thm5_hi_slack", "thm6_lo_slack", "thm6_hi_slack",
    "thm7_lo_slack", "thm7_hi_slack", "dafermos_lhs", "converged",
)


@dataclass
class SweepRecord:
    step: int
    multiplier: float
    ue_cost: float
    so_cost: float
    poa: float
    poa_ratio: float = math.nan
    thm5_lo_slack: float = math.nan
    thm5_hi_slack: float = math.nan
    thm6_lo_slack: float = math.nan
    thm6_hi_slack: float = math.nan
    thm7_lo_slack: float = math.nan
    thm7_hi_slack: float = math.nan
    dafermos_lhs: float = math.nan
    converged: bool = True
    report: object = field(default=None, repr=False, compare=False)

    def row(self) -> dict:
        return {name: getattr(self, name) for name in SWEEP_COLUMNS}


def format_real(x: float) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    return f"{x:.12g}"


def write_sweep_csv(records: Iterable[SweepRecord], sink: IO[str]) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in records:
        writer.writerow([format_real(v) for v in r.row().values()])


def read_sweep_csv(source: IO[str]) -> list[SweepRecord]:
    reader = csv.DictReader(source)
    records = []
    for row in reader:
        values = {}
        for name in SWEEP_COLUMNS:
            if name == "step":
                values[name] = int(row[name])
            elif name == "converged":
                values[name] = row[name] == "1"
            else:
                values[name] = float(row[name])
        records.append(SweepRecord(**values))
    return records


def _json_value(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def sweep_json(records: Iterable[SweepRecord]) -> str:
    rows = [{k: _json_value(v) for k, v in r.row().items()} for r in records]
    return json.dumps(rows, indent=1) + "\n"


def sweep_csv(records: Iterable[SweepRecord]) -> str:
    buf = io.StringIO()
    write_sweep_csv(records, buf)
    return buf.getvalue()
