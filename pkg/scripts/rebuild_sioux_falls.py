"""Rebuild the Sioux Falls TNTP files from the reference project bundled in
the aequilibrae wheel.

The canonical files live in the TransportationNetworks repository; this
script exists for environments that can reach a PyPI mirror but not GitHub.
Link order, capacities, free-flow times and BPR parameters are copied
verbatim; `length` is set equal to the free-flow time and toll/type columns
to 0/1, as in the published file.

    python scripts/rebuild_sioux_falls.py data/SiouxFalls
"""
import argparse
import io
import pathlib
import sqlite3
import subprocess
import sys
import tempfile
import zipfile

import h5py
import numpy as np

NET_HEADER = """<NUMBER OF ZONES> 24
<NUMBER OF NODES> 24
<FIRST THRU NODE> 1
<NUMBER OF LINKS> 76
<ORIGINAL HEADER>~ 
<END OF METADATA>


~ \tinit_node\tterm_node\tcapacity\tlength\tfree_flow_time\tb\tpower\tspeed\ttoll\tlink_type\t;
"""


def fetch_reference(workdir: pathlib.Path) -> zipfile.ZipFile:
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "-q",
         "-d", str(workdir), "aequilibrae"],
        check=True,
    )
    wheel = next(workdir.glob("aequilibrae-*.whl"))
    outer = zipfile.ZipFile(wheel)
    inner = outer.read("aequilibrae/reference_files/sioux_falls.zip")
    return zipfile.ZipFile(io.BytesIO(inner))


def _fmt(x: float) -> str:
    return repr(float(x)) if x != int(x) else str(int(x))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("outdir", type=pathlib.Path)
    args = parser.parse_args(argv)
    args.outdir.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        ref = fetch_reference(tmp)
        ref.extract("project_database.sqlite", tmp)
        ref.extract("matrices/demand.omx", tmp)
        con = sqlite3.connect(tmp / "project_database.sqlite")
        rows = con.execute(
            "select a_node, b_node, capacity_ab, free_flow_time, b, power "
            "from links order by link_id"
        ).fetchall()
        con.close()
        with h5py.File(tmp / "matrices/demand.omx") as omx:
            demand = np.asarray(omx["data/matrix"][:], dtype=float)
            zones = [int(z) for z in omx["lookup/taz"][:]]

    lines = [NET_HEADER]
    for a, b, cap, fft, bb, power in rows:
        lines.append(
            f"\t{a}\t{b}\t{_fmt(cap)}\t{_fmt(fft)}\t{_fmt(fft)}\t{_fmt(bb)}"
            f"\t{int(power)}\t0\t0\t1\t;\n"
        )
    (args.outdir / "SiouxFalls_net.tntp").write_text("".join(lines))

    out = [
        f"<NUMBER OF ZONES> {len(zones)}\n",
        f"<TOTAL OD FLOW> {demand.sum():.1f}\n",
        "<END OF METADATA>\n\n\n",
    ]
    for i, o in enumerate(zones):
        out.append(f"Origin \t{o} \n")
        entries = [f"{d:5d} : {demand[i, j]:10.1f}" for j, d in enumerate(zones)]
        for k in range(0, len(entries), 5):
            out.append(";".join(entries[k:k + 5]) + ";\n")
        out.append("\n")
    (args.outdir / "SiouxFalls_trips.tntp").write_text("".join(out))
    print(f"wrote {len(rows)} links, {int((demand > 0).sum())} OD pairs "
          f"to {args.outdir}", file=sys.stderr)


if __name__ == "__main__":
    main()
