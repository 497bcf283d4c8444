import json
import subprocess
import sys

import pytest

from conftest import SF_NET, SF_TRIPS
from wardrop_sense.cli import main
from wardrop_sense.tntp import read_instance


def run(*argv):
    """Run the CLI in a subprocess so exit codes and streams are real."""
    proc = subprocess.run([sys.executable, "-m", "wardrop_sense", *map(str, argv)],
                          capture_output=True, text=True)
    return proc.returncode, proc.stdout, proc.stderr


def test_check_two_commodity_k1_passes():
    code, out, _ = run("check", "--example", "two-commodity", "--k", 1, "--eps", 0.5)
    assert code == 0
    assert "thm6_hi" in out and "NO" not in out


def test_check_pigou_json(tmp_path):
    out_path = tmp_path / "report.json"
    code, out, err = run("check", "--example", "pigou", "--p", 4, "--eps", 0.1,
                         "--format", "json", "--out", out_path)
    assert code == 0
    (report,) = json.loads(out)
    assert report["all_hold"] and report["p"] == 4
    assert json.loads(out_path.read_text()) == [report]
    manifest = json.loads((tmp_path / "report.json.manifest.json").read_text())
    assert manifest["subcommand"] == "check"


def test_check_eps_grid():
    code, out, _ = run("check", "--example", "pigou", "--p", 2, "--eps-grid", "0:1:3")
    assert code == 0
    assert len(out.strip().splitlines()) == 4


def test_solve_not_converged_exit_code():
    code, out, _ = run("solve", "--net", SF_NET, "--trips", SF_TRIPS, "--objective", "ue",
                       "--max-iter", 1)
    assert code == 2
    lines = out.strip().splitlines()
    assert lines[0].startswith("origin,destination,demand,mu")
    assert len(lines) == 1 + 528


def test_solve_single_od_json():
    code, out, _ = run("solve", "--net", SF_NET, "--trips", SF_TRIPS, "--od", 20, 3,
                       "--demand", 1000, "--objective", "so", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["converged"] and len(data["edge_flows"]) == 76


@pytest.mark.parametrize("argv", [
    ["solve", "--net", "/nonexistent_net.tntp", "--trips", "/nonexistent_trips.tntp", "--objective", "ue"],
    ["sweep", "--example", "pigou", "--eps", 0.1, "--steps", 0],
    ["check", "--example", "pigou", "--eps", -0.1],
    ["solve", "--example", "pigou", "--objective", "ue", "--gap-tol", 0],
    ["solve", "--objective", "ue"],
    ["frobnicate"],
])
def test_usage_and_input_errors_exit_1(argv):
    code, _, err = run(*argv)
    assert code == 1
    assert err


def test_gen_round_trip(tmp_path):
    assert main(["gen", "--example", "two-commodity", "--k", "2", "--out", str(tmp_path)]) == 0
    inst = read_instance(tmp_path / "two_commodity_k2_net.tntp", tmp_path / "two_commodity_k2_trips.tntp")
    assert [e.latency.coefficients for e in inst.network.edges] == [(0.0, 1.0), (3.0,), (0.0, 2.0)]
    assert inst.demands.tolist() == [1.0, 2.0]
    code, out, _ = run("check", "--net", tmp_path / "two_commodity_k2_net.tntp",
                       "--trips", tmp_path / "two_commodity_k2_trips.tntp", "--eps", 0.5,
                       "--format", "json")
    assert code == 0
    assert json.loads(out)[0]["C_fp"] == pytest.approx(18.0, abs=1e-12 * 18 + 1e-9)


def test_sweep_csv_deterministic(tmp_path):
    outputs = []
    for name in ("a.csv", "b.csv"):
        code, _, _ = run("sweep", "--example", "pigou", "--p", 4, "--eps", 0.1, "--steps", 5,
                         "--out", tmp_path / name)
        assert code == 0
        outputs.append((tmp_path / name).read_bytes())
    assert outputs[0] == outputs[1]
    assert len(outputs[0].decode().splitlines()) == 7
