import csv
import io as stdio
import json
import subprocess
import sys

import pytest

from ttcsd import io
from ttcsd.cli import run
from ttcsd.core import AssignmentMatrix
from ttcsd.replay import replay
from ttcsd.rules import identity_rule, tabulate, ttc_table_rule

from conftest import EX3


@pytest.fixture
def files(tmp_path):
    def write(name, doc):
        path = tmp_path / name
        path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
        return str(path)

    return write


def test_ttc_example(files, capsys):
    path = files("ex3.json", io.profile_to_doc(EX3))
    assert run(["ttc", "--profile", path]) == 0
    out = capsys.readouterr().out
    assert io.parse_matrix(out).to_permutation() == (2, 1, 3)


def test_ttc_trace(files, capsys):
    path = files("ex3.json", io.profile_to_doc(EX3))
    assert run(["ttc", "--profile", path, "--trace"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert [r["cycles"] for r in doc["trace"]] == [[[1, 2]], [[3]]]
    assert io.matrix_from_doc(doc["matrix"]).to_permutation() == (2, 1, 3)


def test_ttc_with_endowment(files, capsys):
    # agent 1 holds x2 and agent 2 holds x1; each prefers what the other holds
    path = files("e.json", {"n": 2, "preferences": [[1, 2], [2, 1]], "endowment": [2, 1]})
    assert run(["ttc", "--profile", path]) == 0
    assert io.parse_matrix(capsys.readouterr().out).to_permutation() == (1, 2)


def test_check_swap_preferring_profile(files, capsys):
    p = files("p.json", {"n": 2, "preferences": [[2, 1], [1, 2]]})
    m = files("identity.json", io.matrix_to_doc(AssignmentMatrix.identity(2)))
    assert run(["check", "--axiom", "eff", "--profile", p, "--matrix", m]) == 1
    out, err = capsys.readouterr()
    rep = io.parse_report(out)
    assert not rep.holds
    assert rep.counterexample.dominating == AssignmentMatrix.from_permutation((2, 1))
    assert "violated" in err
    assert run(["check", "--axiom", "ir", "--profile", p, "--matrix", m]) == 0
    assert io.parse_report(capsys.readouterr().out).holds
    assert run(["check", "--axiom", "eff", "--method", "lp", "--profile", p, "--matrix", m, "--format", "csv"]) == 1
    rows = list(csv.DictReader(stdio.StringIO(capsys.readouterr().out)))
    assert [r["axiom"] for r in rows] == ["SdEfficiency"]


def test_check_size_mismatch(files, capsys):
    p = files("p.json", {"n": 2, "preferences": [[2, 1], [1, 2]]})
    m = files("m.json", io.matrix_to_doc(AssignmentMatrix.identity(3)))
    assert run(["check", "--axiom", "ir", "--profile", p, "--matrix", m]) == 2
    assert "error" in capsys.readouterr().err


def test_verify_axioms(capsys):
    assert run(["verify-axioms", "--n", "2"]) == 0
    out, err = capsys.readouterr()
    assert json.loads(out)["passed"] is True
    assert "4/4 pass" in err


def test_verify_axioms_violation_csv(capsys):
    assert run(["verify-axioms", "--n", "2", "--builtin", "serial-dictatorship", "--format", "csv"]) == 1
    rows = list(csv.DictReader(stdio.StringIO(capsys.readouterr().out)))
    assert [r["axiom"] for r in rows] == ["SdIndividualRationality"]


def test_exit_code_independent_of_jobs(capsys):
    codes = [run(["verify-axioms", "--n", "3", "--builtin", "identity", "--jobs", j]) for j in ("1", "2")]
    outs = capsys.readouterr().out
    assert codes == [1, 1]
    docs = [json.loads(d) for d in outs.replace("}\n{", "}\n\x00{").split("\x00")]
    for d in docs:
        d.pop("metadata")
    assert docs[0] == docs[1]


def test_verify_uniqueness(capsys):
    assert run(["verify-uniqueness", "--n", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["uniqueness"]["unique_and_ttc"]
    code = EX3.encode()
    assert run(["verify-uniqueness", "--n", "3", "--force", f"{code}:2,3,1"]) == 1
    assert json.loads(capsys.readouterr().out)["uniqueness"]["survivors"] == 0
    assert run(["verify-uniqueness", "--n", "3", "--force", "nonsense"]) == 2


def test_certify_with_certificates(tmp_path, capsys):
    out_file = tmp_path / "certs.jsonl"
    assert run(["certify", "--n", "2", "--certificates", str(out_file)]) == 0
    assert json.loads(capsys.readouterr().out)["certificates"]["emitted"] == 4
    docs = [json.loads(line) for line in out_file.read_text().splitlines()]
    assert sorted(d["profile_code"] for d in docs) == [0, 1, 2, 3]
    for d in docs:
        replay(d)


def test_certify_table_rule(files, capsys):
    good = files("ttc.json", io.table_rule_to_doc(ttc_table_rule(2)))
    assert run(["certify", "--n", "2", "--rule", good]) == 0
    bad = files("id.json", io.table_rule_to_doc(tabulate(identity_rule, 2)))
    assert run(["certify", "--n", "2", "--rule", bad]) == 1
    assert run(["certify", "--n", "3", "--rule", bad]) == 2
    doc = io.table_rule_to_doc(tabulate(identity_rule, 2))
    del doc["table"]["2"]
    assert run(["certify", "--n", "2", "--rule", files("missing.json", doc)]) == 2
    capsys.readouterr()


def test_enumerate(capsys):
    assert run(["enumerate", "--n", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 4
    assert [io.parse_profile(line).encode() for line in lines] == [0, 1, 2, 3]
    assert run(["enumerate", "--n", "2", "--format", "csv"]) == 0
    rows = list(csv.DictReader(stdio.StringIO(capsys.readouterr().out)))
    assert rows[2] == {"profile_code": "2", "preferences": "[[2,1],[1,2]]"}


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["verify-axioms"],
        ["verify-axioms", "--n", "1"],
        ["verify-axioms", "--n", "5"],
        ["verify-axioms", "--n", "2", "--jobs", "0"],
        ["check", "--axiom", "sp", "--profile", "a", "--matrix", "b"],
        ["ttc", "--profile", "/nonexistent/profile.json"],
    ],
)
def test_usage_errors(argv, capsys):
    assert run(argv) == 2
    assert capsys.readouterr().out == ""


def test_parse_errors(files, capsys):
    assert run(["ttc", "--profile", files("bad.json", '{"n": 2, "preferences": [[2, 2], [1, 2]]}')]) == 2
    assert "not a permutation" in capsys.readouterr().err
    assert run(["ttc", "--profile", files("broken.json", "{")]) == 2


def test_jobs_env_default(monkeypatch, capsys):
    monkeypatch.setenv("TTCSD_JOBS", "2")
    assert run(["verify-axioms", "--n", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["metadata"]["jobs"] == 2


def test_module_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "ttcsd", "verify-axioms", "--n", "2"], capture_output=True, text=True
    )
    assert out.returncode == 0
    assert json.loads(out.stdout)["passed"]
    assert "4/4 pass" in out.stderr
