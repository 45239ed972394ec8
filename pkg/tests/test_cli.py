from __future__ import annotations

import json

import pytest

from conftest import REPO
from rsverify.cli import main

CORPUS = REPO / "src" / "rsverify" / "corpus"


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_exit_codes(capsys):
    assert _run(capsys, "verify", CORPUS / "example2.rsl", CORPUS / "mutex.ltl")[0] == 0
    assert _run(capsys, "verify", CORPUS / "example2.rsl", CORPUS / "nonstarve1.ltl")[0] == 1


def test_verify_undefined_exit_code(capsys, tmp_path):
    prog = tmp_path / "p.rsl"
    prog.write_text("data Event = Tick/0;\nf es where f = \\es. g es; g = \\es. f es;")
    prop = tmp_path / "p.ltl"
    prop.write_text("{True}")
    code, out, _ = _run(capsys, "verify", prog, prop, "--no-transform")
    assert code == 2 and out.strip() == "Undefined"


def test_missing_file(capsys):
    code, _, err = _run(capsys, "check", "does-not-exist.rsl")
    assert code >= 10 and "does-not-exist.rsl" in err


def test_parse_error_exit(capsys, tmp_path):
    bad = tmp_path / "bad.rsl"
    bad.write_text("f es where f = \\es. case es of")
    assert _run(capsys, "check", bad)[0] >= 10


def test_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["verify"])
    assert info.value.code >= 10


def test_no_transform_requires_restricted(capsys):
    code = _run(capsys, "verify", CORPUS / "example1.rsl", CORPUS / "mutex.ltl", "--no-transform")[0]
    assert code >= 10


def test_verify_json(capsys):
    code, out, _ = _run(capsys, "verify", CORPUS / "example1_distilled.rsl", CORPUS / "mutex.ltl",
                        "--no-transform", "--json", "--trace")
    data = json.loads(out)
    assert code == 1 and data["verdict"] == "False"
    assert {"verdict", "seconds", "trace", "program", "property", "fairness"} <= set(data)
    assert data["trace"][0].keys() == {"rule", "function", "formula", "rho"}
    assert json.loads(json.dumps(data)) == data


def test_fair_option(capsys):
    args = ["verify", CORPUS / "example3_distilled.rsl", CORPUS / "nonstarve1.ltl", "--no-transform"]
    assert _run(capsys, *args)[0] == 0
    assert _run(capsys, *args, "--fair", "none")[0] == 1
    assert _run(capsys, *args, "--fair", "Bogus")[0] >= 10


def test_oracle(capsys):
    code, out, _ = _run(capsys, "oracle", CORPUS / "example1.rsl", CORPUS / "mutex.ltl", "--json")
    data = json.loads(out)
    assert code == 1
    assert data["witness"]["prefix"] == ["Request1", "Request2", "Take1", "Take2"]


def test_lts_dot(capsys, tmp_path):
    path = tmp_path / "g.dot"
    code, out, _ = _run(capsys, "lts", CORPUS / "example2_distilled.rsl", "--no-transform",
                        "--dot", path)
    assert code == 0 and path.read_text().startswith("digraph")
    code, out, _ = _run(capsys, "lts", CORPUS / "example2_distilled.rsl", "--no-transform",
                        "--self-loops")
    assert out.count('"f5" -> "f5"') == 6


def test_transform_and_eval(capsys, tmp_path):
    out_path = tmp_path / "ex1.rsl"
    code, _, err = _run(capsys, "transform", CORPUS / "example1.rsl", "-o", out_path,
                        "--check-bisim", "--trials", "20", "--seed", "5")
    assert code == 0 and "ok" in err
    code, out, _ = _run(capsys, "check", out_path, "--restricted")
    assert code == 0 and "9 functions" in out
    code, out, _ = _run(capsys, "eval", CORPUS / "example1.rsl",
                        "--events", "Request1,Request2,Take1,Take2")
    assert code == 0 and out.splitlines()[-1] == "4: ObsState U U"


def test_corpus_run(capsys):
    code, out, _ = _run(capsys, "corpus", "run", "--json")
    data = json.loads(out)
    assert code == 0 and data["ok"]
    assert len(data["results"]) == 12
