"""Problem files, reports and the command-line front end."""

import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from epidiff import problem, report
from epidiff.cli import main
from epidiff.extreal import INF, NEG_INF
from epidiff.problem import ProblemError

ROOT = Path(__file__).resolve().parent.parent
SHIPPED = sorted((ROOT / "problems").glob("*.json"))


def write(tmp_path, obj, name="p.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj, indent=1))
    return str(path)


SCAD_PROBLEM = {
    "instance": {"kind": "scad", "lam": 1.0, "a": 3.0, "m": 1},
    "queries": [
        {"op": "eval", "x": [2.0], "expect": 1.75},
        {"op": "subderivative", "x": [0.0], "w": [-2.0], "expect": 2.0},
        {"op": "second_subderivative", "x": [0.0], "v": [0.0], "w": [1.0], "expect": "+inf"},
    ],
}


# ----------------------------------------------------------------------
# problem parsing

def test_loads_tracks_lines():
    obj = problem.loads('{\n "a": 1,\n "b": {\n  "c": 2}\n}')
    assert obj.line == 1
    assert obj["b"].line == 3


def test_invalid_json_reports_the_line():
    with pytest.raises(ProblemError) as exc:
        problem.loads('{\n "a": 1,\n "b": \n}')
    assert exc.value.line == 4


@pytest.mark.parametrize("mutate, message", [
    (lambda p: p["queries"][0].update(x=[1.0, 2.0]), "dimension"),
    (lambda p: p["queries"][0].pop("x"), "needs field 'x'"),
    (lambda p: p["queries"][0].update(op="hessian"), "op"),
    (lambda p: p["instance"].update(kind="nope"), "kind"),
    (lambda p: p["queries"][1].update(w="up"), "list of numbers"),
])
def test_malformed_problems_are_rejected(mutate, message):
    data = json.loads(json.dumps(SCAD_PROBLEM))
    mutate(data)
    with pytest.raises(ProblemError) as exc:
        problem.parse(json.dumps(data, indent=1))
    assert message in str(exc.value)


def test_error_carries_the_query_line():
    data = json.loads(json.dumps(SCAD_PROBLEM))
    data["queries"][2]["x"] = [0.0, 1.0]
    text = json.dumps(data, indent=1)
    with pytest.raises(ProblemError) as exc:
        problem.parse(text)
    start = text.index('"op": "second_subderivative"')
    assert exc.value.line == text.count("\n", 0, start)


def test_run_query_records(tmp_path):
    p = problem.load(write(tmp_path, SCAD_PROBLEM))
    sched = problem.schedule_for(p, {})
    recs = [problem.run_query(p, q, sched, with_oracle=False) for q in p.queries]
    assert [r["verdict"] for r in recs] == ["PASS", "PASS", "PASS"]
    assert recs[2]["value"] == INF


# ----------------------------------------------------------------------
# reports

def test_report_round_trip_is_bit_exact(tmp_path):
    values = [0.1, 1 / 3, -2.5e-300, 5e-324, 1.7976931348623157e308, INF, NEG_INF, 0.0, -0.0]
    rec = {"record": "query", "values": values, "nested": {"x": [math.pi, INF]}, "flag": True, "n": 3}
    path = tmp_path / "r.jsonl"
    report.write(path, [rec, {"record": "summary", "pass": 1}])
    back = report.read(path)
    assert back[1] == {"record": "summary", "pass": 1}
    for a, b in zip(back[0]["values"], values):
        assert a == b and math.copysign(1.0, a) == math.copysign(1.0, b)
    assert back[0]["nested"]["x"] == [math.pi, INF]
    assert '"+inf"' in path.read_text() and "Infinity" not in path.read_text()


# ----------------------------------------------------------------------
# command line

def test_run_pass_exit_code(tmp_path, capsys):
    assert main(["run", write(tmp_path, SCAD_PROBLEM)]) == 0
    out = capsys.readouterr().out
    assert "summary: 3 pass, 0 fail, 0 error" in out


def test_run_fail_exit_code(tmp_path, capsys):
    data = json.loads(json.dumps(SCAD_PROBLEM))
    data["queries"][0]["expect"] = 1.5
    assert main(["run", write(tmp_path, data)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_malformed_dimension_exits_2(tmp_path, capsys):
    data = json.loads(json.dumps(SCAD_PROBLEM))
    data["queries"][1]["w"] = [1.0, 2.0]
    assert main(["run", write(tmp_path, data)]) == 2
    err = capsys.readouterr().err
    assert "line" in err and "dimension" in err


def test_precondition_violation_exits_2(tmp_path, capsys):
    data = json.loads(json.dumps(SCAD_PROBLEM))
    data["queries"].append({"op": "second_subderivative", "x": [0.0], "v": [3.0], "w": [1.0]})
    assert main(["run", write(tmp_path, data)]) == 2
    assert "not a subgradient" in capsys.readouterr().err


def test_missing_file_exits_2(tmp_path, capsys):
    assert main(["run", str(tmp_path / "absent.json")]) == 2


def test_report_file(tmp_path, capsys):
    out = tmp_path / "rep.jsonl"
    assert main(["run", write(tmp_path, SCAD_PROBLEM), "--out", str(out), "--seed", "5"]) == 0
    recs = report.read(out)
    assert [r["record"] for r in recs] == ["header", "query", "query", "query", "summary"]
    assert recs[0]["schedule"]["seed"] == 5
    assert recs[3]["value"] == INF
    assert recs[-1]["exit_code"] == 0


def test_oracle_flag_adds_comparisons(tmp_path, capsys):
    out = tmp_path / "rep.jsonl"
    assert main(["run", write(tmp_path, SCAD_PROBLEM), "--oracle", "--levels", "8", "--out", str(out)]) == 0
    recs = [r for r in report.read(out) if r["record"] == "query"]
    assert "oracle" not in recs[0]
    assert recs[1]["oracle_verdict"] == "PASS"
    assert recs[2]["oracle"]["divergence_flag"] or recs[2]["oracle"]["trend_positive"]


def test_filter(tmp_path, capsys):
    assert main(["run", write(tmp_path, SCAD_PROBLEM), "--filter", "eval"]) == 0
    assert "queries: 1" in capsys.readouterr().out


def test_bad_schedule_option_is_rejected(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", write(tmp_path, SCAD_PROBLEM), "--tau0", "-1"])
    assert exc.value.code == 2


@pytest.mark.parametrize("path", SHIPPED, ids=[p.name for p in SHIPPED])
def test_shipped_problems_pass(path, capsys):
    assert main(["run", str(path)]) == 0


def test_selftest_filter_and_seed(capsys):
    assert main(["selftest", "--filter", "polyhedra", "--seed", "3"]) == 0
    first = capsys.readouterr().out
    assert main(["selftest", "--filter", "polyhedra", "--seed", "3"]) == 0
    assert capsys.readouterr().out == first
    lines = [l for l in first.splitlines() if l.startswith(("PASS", "FAIL"))]
    assert lines and all(" polyhedra " in l for l in lines)


def test_selftest_unknown_filter_exits_2(capsys):
    assert main(["selftest", "--filter", "no-such-check"]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "epidiff", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("epidiff ")


def test_full_selftest_is_green(capsys):
    assert main(["selftest"]) == 0
    assert "FAIL" not in capsys.readouterr().out
