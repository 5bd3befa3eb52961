import json
from importlib import resources

import jsonschema
import numpy as np
import pytest

from psmoa import formats
from psmoa.cli import main
from psmoa.model import generate_scenario

FAST = ["--pop-size", "12", "--generations", "6"]


def schema(name):
    return json.loads(resources.files("psmoa").joinpath("schemas", name).read_text())


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_run_outputs(tmp_path):
    out = tmp_path / "r"
    assert run_cli("run", "--scale", "small", "--algorithm", "psmoa", "--seed", 42, *FAST, "--out", out) == 0
    assert sorted(p.name for p in out.iterdir()) == ["front.csv", "manifest.json", "trace.jsonl"]
    manifest = json.loads((out / "manifest.json").read_text())
    jsonschema.validate(manifest, schema("manifest.schema.json"))
    assert manifest["status"] == "complete"
    trace_schema = schema("trace.schema.json")
    lines = (out / "trace.jsonl").read_text().splitlines()
    assert len(lines) == 7
    for line in lines:
        jsonschema.validate(json.loads(line), trace_schema)
    header = (out / "front.csv").read_text().splitlines()[0]
    assert header == "f1_cost,f2_time,f3_neg_popularity,f4_load"
    pts = formats.read_front_csv(out / "front.csv")
    assert pts.shape[1] == 4
    # rows ordered by the first column
    assert np.all(np.diff(pts[:, 1]) >= 0)


@pytest.mark.parametrize("algorithm", ["nsga2", "nsga3", "psmoa"])
def test_rerun_is_byte_identical(tmp_path, algorithm):
    for name in ("a", "b"):
        assert run_cli("run", "--algorithm", algorithm, "--seed", 3, *FAST, "--out", tmp_path / name) == 0
    assert (tmp_path / "a" / "front.csv").read_bytes() == (tmp_path / "b" / "front.csv").read_bytes()
    assert (tmp_path / "a" / "trace.jsonl").read_bytes() == (tmp_path / "b" / "trace.jsonl").read_bytes()


def test_unknown_algorithm_exit_2(tmp_path, capsys):
    assert run_cli("run", "--algorithm", "spea2", "--out", tmp_path) == 2
    err = capsys.readouterr().err
    assert "nsga2" in err and "nsga3" in err and "psmoa" in err


def test_bad_population_exit_2(tmp_path, capsys):
    assert run_cli("run", "--pop-size", "7", "--out", tmp_path) == 2
    assert "population_size" in capsys.readouterr().err


def test_bad_policy_reports_line(tmp_path, capsys):
    pol = tmp_path / "p.yaml"
    pol.write_text("format: psmoa-policy/1\nalpha: [1, 1, 1]\n")
    assert run_cli("run", "--policy", pol, *FAST, "--out", tmp_path / "o") == 2
    assert "p.yaml:1" in capsys.readouterr().err


def test_json_format(tmp_path):
    assert run_cli("run", *FAST, "--format", "json", "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "front.json").read_text())
    assert len(doc) == 12
    assert all(list(row) == ["f1_cost", "f2_time", "f3_neg_popularity", "f4_load"] for row in doc)


def test_scenario_file_round_trip(tmp_path):
    path = tmp_path / "s.yaml"
    assert run_cli("scenario", "--scale", "small", "--scenario-seed", 4, "--out", path) == 0
    assert formats.load_scenario(path) == generate_scenario("small", 4)
    assert run_cli("run", "--scenario", path, *FAST, "--out", tmp_path / "a") == 0
    assert run_cli("run", "--scale", "small", "--scenario-seed", 4, *FAST, "--out", tmp_path / "b") == 0
    assert (tmp_path / "a" / "front.csv").read_bytes() == (tmp_path / "b" / "front.csv").read_bytes()


def test_schedule_file(tmp_path):
    sched = tmp_path / "s.yaml"
    sched.write_text("format: psmoa-schedule/1\nunit: generation\nchanges:\n"
                     "  - {at: 3, alpha: [0.4, 0.2, 0.3, 0.1], note: tighten}\n")
    assert run_cli("run", "--schedule", sched, *FAST, "--out", tmp_path / "o") == 0
    trace = [json.loads(x) for x in (tmp_path / "o" / "trace.jsonl").read_text().splitlines()]
    assert [r["policy_epoch"] for r in trace] == [1, 1, 1, 2, 2, 2, 2]
    assert run_cli("run", "--schedule", sched, "--algorithm", "nsga2", *FAST, "--out", tmp_path / "x") == 2


def test_compare_single_seed(tmp_path):
    assert run_cli("compare", "--seeds", "0..0", *FAST, "--out", tmp_path) == 0
    rows = (tmp_path / "results.csv").read_text().splitlines()
    assert rows[0] == "algorithm,scenario,seed,HV,GD,IGD"
    assert len(rows) == 4
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert set(summary["orderings"]) >= {"HV", "GD", "IGD"}
    assert sorted(p.name for p in (tmp_path / "fronts").iterdir()) == [
        "nsga2_seed0.csv", "nsga3_seed0.csv", "psmoa_seed0.csv"]


def test_daycycle_outputs(tmp_path):
    assert run_cli("daycycle", "--pop-size", 12, "--generations", 48, "--out", tmp_path) == 0
    weights = []
    for k in ("time", "cost", "popularity", "load"):
        lines = (tmp_path / f"weight_{k}.csv").read_text().splitlines()
        assert lines[0] == "hour,value" and len(lines) == 25
        weights.append([float(x.split(",")[1]) for x in lines[1:]])
        assert len((tmp_path / f"performance_{k}.csv").read_text().splitlines()) == 25
    w = np.array(weights)
    assert np.all((w >= 0) & (w <= 1))
    assert np.allclose(w.sum(axis=0), 1.0, atol=1e-9)


def test_scale_outputs(tmp_path):
    assert run_cli("scale", "--scales", "small", "--pop-size", 8, "--generations", 2, "--out", tmp_path) == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {"scatter_small_cost_time.csv", "summary.json", "manifest.json"} <= names
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["within_budget"] and len(summary["small_psmoa_cost_range"]) == 2


def test_scale_over_budget_exits_1(tmp_path):
    assert run_cli("scale", "--scales", "small", "--pop-size", 8, "--generations", 2, "--budget", 0,
                   "--out", tmp_path) == 1
