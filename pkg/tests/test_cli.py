import csv
import io
import json

import pytest
from click.testing import CliRunner

from nullcone.cli import main

SMALL = """\
[grid]
u0 = -40
u_max = -10
ub0 = 0
ub_max = 3
n_u = 16
n_ub = 16
L = 4
s = 5
"""
ACCEPT = "[grid]\nu0 = -800\nub_max = 8.75\nn_u = 64\nn_ub = 64\nL = 8\ns = 5\n"


@pytest.fixture
def run():
    runner = CliRunner()

    def invoke(*args, env=None):
        return runner.invoke(main, list(args), env=env, catch_exceptions=False)
    return invoke


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_background_passes(run, tmp_path):
    table = tmp_path / "decay.csv"
    res = run("background", "--M", "1", "--a", "0", "--samples", "50", "--table", str(table))
    assert res.exit_code == 0
    assert json.loads(res.stdout)["passed"]
    assert "PASS AC1.ricci_fd" in res.stderr
    header = table.read_text().splitlines()[0]
    assert header == "r,quantity,value,class_q,class_p,normalized_constant"


def test_background_config_and_override(run, tmp_path):
    cfg = write(tmp_path, "bg.cfg", "[background]\nM = 2\nr_min = 20\nr_max = 2000\nn_samples = 40\n")
    res = run("background", "--config", cfg)
    assert res.exit_code == 0
    meta = json.loads(res.stdout)["meta"]
    assert (meta["M"], meta["r_min"], meta["samples"]) == (2.0, 20.0, 40)
    res = run("background", "--config", cfg, "--samples", "30")
    assert json.loads(res.stdout)["meta"]["samples"] == 30
    bad = write(tmp_path, "bad.cfg", "[background]\nM = 1\nr_max = -1\n")
    res = run("background", "--config", bad)
    assert res.exit_code == 2 and "line 3" in res.stderr


def test_background_rejects_rotation(run):
    res = run("background", "--a", "0.5")
    assert res.exit_code == 2 and "config error" in res.stderr


def test_decaycheck_all(run):
    res = run("decaycheck", "--all")
    assert res.exit_code == 0
    assert "36/36 equations pass" in res.stderr
    assert run("decaycheck", "--equation", "nab4-trchi").exit_code == 0
    assert run("decaycheck", "--eq", "nab4-trchi").exit_code == 0


def test_decaycheck_mutant_is_rule_failure(run):
    res = run("decaycheck", "--equation", "mutant-trchi-bad-error")
    assert res.exit_code == 1 and "failing rules: AC7.mutant-trchi-bad-error" in res.stderr
    assert run("decaycheck", "--equation", "nope").exit_code == 2


def test_hodge_and_frames(run):
    assert run("hodge", "verify", "--L", "8", "--trials", "3").exit_code == 0
    assert run("hodge", "poincare", "--L", "8", "--trials", "2").exit_code == 0
    assert run("frames", "verify", "--trials", "3").exit_code == 0


def test_energy_commands(run, tmp_path):
    res = run("energy", "cases", "--format", "csv")
    assert res.exit_code == 0 and res.stdout.startswith("section,name,coordinate,value")
    cfg = write(tmp_path, "g.cfg", SMALL)
    res = run("energy", "run", "--pair", "alpha-beta", "--p", "5", "--grid", cfg)
    assert res.exit_code == 0
    d = json.loads(res.stdout)
    assert {"pair", "p", "case", "fluxes", "bulk", "residual_linf", "convergence_order"} <= set(d)
    assert d["case"] == "a" and d["p"] == "5"
    assert run("energy", "run", "--pair", "alpha-beta", "--p", "x", "--grid", cfg).exit_code == 2


def test_evolve_outputs_are_deterministic(run, tmp_path):
    cfg = write(tmp_path, "acc.cfg", ACCEPT)
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        res = run("--seed", "0", "evolve", "run", "--grid", cfg, "--out-dir", str(d))
        assert res.exit_code == 0, res.stderr
        outs.append(((d / "evolve_cones.csv").read_bytes(), (d / "evolve_summary.json").read_bytes()))
    assert outs[0] == outs[1]
    rows = list(csv.reader(io.StringIO(outs[0][0].decode())))
    assert rows[0] == ["axis", "norm", "coordinate", "value"]
    assert {r[0] for r in rows[1:]} == {"u", "ub"}
    summary = json.loads(outs[0][1])
    assert summary["passed"] and summary["slopes"]["betab"]["expected"] == -2.0


def test_evolve_failure_exit_code(run, tmp_path):
    res = run("evolve", "run", "--grid", write(tmp_path, "s.cfg", SMALL))
    assert res.exit_code == 1 and "failing rules: AC9.slope" in res.stderr


def test_evolve_unstable_grid(run, tmp_path):
    cfg = write(tmp_path, "u.cfg", SMALL.replace("ub_max = 3", "ub_max = 60"))
    res = run("evolve", "run", "--grid", cfg)
    assert res.exit_code == 2 and "ub_max" in res.stderr


@pytest.mark.parametrize("text,needle", [
    ("", "empty configuration"),
    (SMALL + "colour = red\n", "line 10, key 'colour'"),
    (SMALL.replace("L = 4", "L = four"), "line 8, key 'L'"),
])
def test_config_errors_exit_2(run, tmp_path, text, needle):
    res = run("evolve", "run", "--grid", write(tmp_path, "bad.cfg", text))
    assert res.exit_code == 2 and needle in res.stderr


@pytest.mark.parametrize("value", ["0", "-1", "two"])
def test_thread_cap_validation(run, value):
    res = run("decaycheck", "--all", env={"NULLCONE_THREADS": value})
    assert res.exit_code == 2 and "NULLCONE_THREADS" in res.stderr


def test_thread_cap_applied(run):
    assert run("decaycheck", "--all", env={"NULLCONE_THREADS": "1"}).exit_code == 0


def test_transport_and_peeling(run):
    assert run("evolve", "transport").exit_code == 0
    res = run("report", "peeling", "--s", "7")
    assert res.exit_code == 0 and "PASS AC10.s=7" in res.stderr
    assert run("report", "peeling", "--s", "2").exit_code == 2


def test_output_file_and_render(run, tmp_path):
    out = tmp_path / "t.json"
    assert run("evolve", "transport", "--out", str(out)).exit_code == 0
    res = run("report", "render", str(out))
    assert res.exit_code == 0 and res.stdout.startswith("section,name,coordinate,value")
    again = tmp_path / "again.json"
    assert run("report", "render", str(out), "--format", "json", "--out", str(again)).exit_code == 0
    assert json.loads(again.read_text())["traces"] == json.loads(out.read_text())["traces"]
    bad = write(tmp_path, "bad.json", "[1, 2]")
    assert run("report", "render", bad).exit_code == 2


def test_render_plot(run, tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "t.json"
    run("evolve", "transport", "--out", str(out))
    png = tmp_path / "t.png"
    assert run("report", "render", str(out), "--plot", str(png)).exit_code == 0
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_unwritable_output(run, tmp_path):
    res = run("energy", "cases", "--out", str(tmp_path / "missing" / "x.json"))
    assert res.exit_code == 2
