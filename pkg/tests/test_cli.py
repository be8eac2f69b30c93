from __future__ import annotations

import csv
import io
import json
from fractions import Fraction

import pytest

from powernap.cli import main
from powernap.core import dump_instance, load_instance, make_instance, schedule_from_dict, schedule_to_dict
from powernap.oracle import gap_instance


@pytest.fixture
def write(tmp_path):
    def _write(name, inst_or_text):
        path = tmp_path / name
        text = inst_or_text if isinstance(inst_or_text, str) else dump_instance(inst_or_text)
        path.write_text(text)
        return str(path)

    return _write


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_with_oracle(capsys, write):
    path = write("e1.json", make_instance([(0, 3, 2)], wake_cost=2))
    code, out, _ = run(capsys, "solve", path, "--alg", "opt-plus-p", "--oracle")
    doc = json.loads(out)
    assert code == 0
    assert doc["cost"]["total"] == 4
    assert doc["guarantee"]["bound"] == 6 and doc["guarantee"]["satisfied"]


def test_solve_lp_two_approx_on_gap(capsys, write):
    path = write("gap.json", gap_instance(2))
    code, out, _ = run(capsys, "solve", path, "--alg", "lp-two-approx")
    assert code == 0 and json.loads(out)["cost"]["total"] <= 14


def test_solve_report_round_trips(capsys, write):
    inst = make_instance([(0, 4, 2), (2, 7, 3)], machines=2, wake_cost=2)
    path = write("m.json", inst)
    for alg in ("six-approx", "lp-two-approx", "brute", "multi-skeleton"):
        code, out, _ = run(capsys, "solve", path, "--alg", alg)
        assert code == 0
        doc = json.loads(out)
        assert schedule_to_dict(schedule_from_dict(doc, 2)) == doc


def test_exit_codes(capsys, write):
    ok = write("ok.json", make_instance([(0, 3, 2)], wake_cost=2))
    assert run(capsys, "solve", ok, "--alg", "nonsense")[0] == 2
    infeasible = write("inf.json", make_instance([(0, 1, 1), (0, 1, 1)]))
    code, out, _ = run(capsys, "solve", infeasible)
    assert code == 3 and json.loads(out)["bound_certificate"]["value"] == 1
    big = write("big.json", make_instance([(0, 80, 1)]))
    assert run(capsys, "solve", big, "--oracle")[0] == 4
    multi = write("multi.json", make_instance([(0, 3, 2)], machines=2))
    assert run(capsys, "solve", multi, "--alg", "a35-18")[0] == 2


@pytest.mark.parametrize("text", ["", "{", "[1]", '{"q": 1, "m": 1, "jobs": [{"r": 0}]}',
                                  '{"q": 1, "m": 1, "jobs": [{"r": 0, "d": 1, "p": 5}]}'])
def test_malformed_input_exits_cleanly(capsys, write, text):
    path = write("bad.json", text)
    code, _, err = run(capsys, "solve", path)
    assert code == 2 and "powernap:" in err


def test_missing_file(capsys, tmp_path):
    assert run(capsys, "solve", str(tmp_path / "nope.json"))[0] == 2


def test_gen_gap_instance(capsys):
    code, out, _ = run(capsys, "gen", "--gap-instance", "2")
    assert code == 0
    inst = load_instance(out)
    assert [(j.release, j.deadline, j.processing) for j in inst.jobs] == [(0, 1, 1), (5, 6, 1), (0, 6, 2)]


def test_gen_random_deterministic(capsys, monkeypatch):
    monkeypatch.delenv("POWERNAP_SEED", raising=False)
    args = ("gen", "--random", "--n", "3", "--d", "10", "--q", "2", "--m", "1", "--seed", "7")
    first = run(capsys, *args)[1]
    assert first == run(capsys, *args)[1]
    assert load_instance(first).n == 3
    code, out, _ = run(capsys, "gen", "--random", "--n", "0", "--seed", "1")
    assert code == 0 and load_instance(out).n == 0
    assert run(capsys, "gen", "--random")[0] == 2


def test_seed_env_overrides(capsys, monkeypatch):
    args = ("gen", "--random", "--n", "3", "--d", "10", "--seed", "1")
    monkeypatch.setenv("POWERNAP_SEED", "7")
    with_env = run(capsys, *args)[1]
    monkeypatch.delenv("POWERNAP_SEED")
    assert with_env == run(capsys, "gen", "--random", "--n", "3", "--d", "10", "--seed", "7")[1]


def test_check_command(capsys, write, tmp_path):
    inst_path = write("e1.json", make_instance([(0, 3, 2)], wake_cost=2))
    rep = tmp_path / "rep.json"
    assert run(capsys, "solve", inst_path, "-o", str(rep))[0] == 0
    code, out, _ = run(capsys, "check", str(rep), "--instance", inst_path)
    assert code == 0 and out.startswith("ok")
    doc = json.loads(rep.read_text())
    doc["assignment"] = doc["assignment"][:1]
    rep.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "check", str(rep), "--instance", inst_path)
    assert code == 1 and "volume 1 < p 2" in out


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_report_shape_and_ratios(capsys, write):
    paths = [write(f"g{q}.json", gap_instance(q)) for q in (2, 3, 4, 5)]
    code, out, _ = run(capsys, "report", *paths, "--algs", "brute,lp-two-approx", "--jobs", "2")
    rows = rows_of(out)
    assert code == 0 and len(rows) == 8
    assert list(rows[0]) == ["instance", "algorithm", "status", "cost", "opt", "ratio", "runtime_ms"]
    assert [(r["instance"], r["algorithm"]) for r in rows] == [(p, a) for p in paths for a in ("brute", "lp-two-approx")]
    assert all(Fraction(r["ratio"]) >= 1 for r in rows)


def test_report_two_by_two_and_empty(capsys, write):
    a = write("a.json", make_instance([(0, 3, 2)], wake_cost=2))
    b = write("b.json", make_instance([(0, 1, 1), (5, 6, 1)], wake_cost=2))
    code, out, _ = run(capsys, "report", a, b, "--algs", "opt-plus-p,near-opt")
    assert len(rows_of(out)) == 4
    code, out, _ = run(capsys, "report")
    assert code == 0 and out.strip() == "instance,algorithm,status,cost,opt,ratio,runtime_ms"


def test_report_marks_error_rows(capsys, write):
    a = write("m.json", make_instance([(0, 3, 2)], machines=2))
    code, out, _ = run(capsys, "report", a, "--algs", "opt-plus-p,six-approx", "--format", "json")
    rows = json.loads(out)
    assert rows[0]["status"].startswith("error") and rows[1]["status"] == "ok"
