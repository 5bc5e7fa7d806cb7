from __future__ import annotations

import json
import subprocess
import sys

from eulerhydro.cli import main, parse_profile
from eulerhydro.experiments import ExperimentReport


def run(tmp_path, *args):
    out = tmp_path / "out"
    code = main([*args, "--out", str(out)])
    return code, out


def report(out):
    return ExperimentReport.from_json(out / "report.json")


def test_validate(tmp_path):
    code, out = run(tmp_path, "validate", "--model", "tasep")
    assert code == 0 and report(out).passed


def test_validate_model_file(tmp_path):
    bad = tmp_path / "m.json"
    bad.write_text(json.dumps({"K": 1, "kernel": {"2": 1.0}, "rates": [[0, 0], [1, 0]]}))
    code, out = run(tmp_path, "validate", "--model-file", str(bad))
    assert code == 1
    assert [v["assumption"] for v in report(out).measurements["violations"]] == ["A1"]


def test_simulate(tmp_path):
    code, out = run(tmp_path, "simulate", "--L", "50", "--horizon", "20", "--snapshots", "3", "--replicas", "2")
    assert code == 0
    assert (out / "snapshots.csv").exists() and (out / "plotdata" / "final_occupancy.csv").exists()


def test_flux_table(tmp_path):
    code, out = run(tmp_path, "flux-table", "--points", "5", "--L", "40", "--burn-in", "50", "--horizon", "100",
                    "--replicas", "2")
    assert code in (0, 1)
    assert (out / "flux_table.csv").exists() and (out / "flux_table.json").exists()


def test_riemann(tmp_path):
    code, out = run(tmp_path, "riemann", "--lam", "1", "--rho", "0", "--points", "41")
    assert code == 0
    lines = (out / "plotdata" / "solution.csv").read_text().splitlines()
    assert lines[0] == "x,value" and len(lines) == 42


def test_glimm_and_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dx": 0.1, "horizon": 0.3, "points": 21}))
    code, out = run(tmp_path, "glimm", "--config", str(cfg), "--profile=-1,0,1:0.8,0.2")
    assert code == 0
    assert report(out).params["dx"] == 0.1
    assert (out / "sampling.csv").exists()


def test_global_options_before_subcommand(tmp_path):
    out = tmp_path / "early"
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 5, "horizon": 0.2}))
    code = main(["--out", str(out), "--config", str(cfg), "glimm", "--dx", "0.1"])
    assert code == 0
    rep = report(out)
    assert rep.params["horizon"] == 0.2 and rep.params["seed"] == 5


def test_hydro_small(tmp_path):
    code, out = run(tmp_path, "hydro", "--N", "300", "--replicas", "2", "--tolerance", "0.2")
    assert code == 0
    assert (out / "plotdata" / "reference.csv").exists()


def test_local_eq(tmp_path):
    code, out = run(tmp_path, "local-eq", "--N", "200", "--l", "10", "--replicas", "2", "--tolerance", "0.2")
    assert code in (0, 1) and (out / "blocks.csv").exists()


def test_stability(tmp_path):
    code, out = run(tmp_path, "stability", "--N", "200", "--replicas", "3")
    assert code == 0 and (out / "excess.csv").exists()


def test_propagation(tmp_path):
    code, out = run(tmp_path, "propagation", "--replicas", "5")
    assert code == 0 and report(out).measurements["agreement_fraction"] == 1.0


def test_error_exit(tmp_path):
    code, _ = run(tmp_path, "riemann", "--lam", "1.5", "--rho", "0")
    assert code == 2


def test_parse_profile(tmp_path):
    p = parse_profile("-1,0,1:0.8,0.2")
    assert p.values.tolist() == [0.8, 0.2]
    assert parse_profile({"breakpoints": [0, 1], "values": [0.5]}).integral() == 0.5
    path = p.to_csv(tmp_path / "p.csv")
    assert parse_profile(str(path)) == p


def test_console_entry():
    res = subprocess.run([sys.executable, "-m", "eulerhydro.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "propagation" in res.stdout
