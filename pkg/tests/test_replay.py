import ast
import copy
from pathlib import Path

import pytest

import ttcsd.replay as replay_mod
from ttcsd.core import Profile
from ttcsd.derivation import derive_profile
from ttcsd.io import certificate_to_doc, matrix_to_doc
from ttcsd.replay import ReplayError, decode, encode, is_valid, replay
from ttcsd.rules import ttc_table_rule

from conftest import EX3, EX3_TTC


@pytest.fixture
def doc():
    return certificate_to_doc(derive_profile(EX3, ttc_table_rule(3)))


def test_replayer_is_self_contained():
    tree = ast.parse(Path(replay_mod.__file__).read_text())
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom):
            assert node.level == 0 and not (node.module or "").startswith("ttcsd")
        elif isinstance(node, ast.Import):
            assert all(not a.name.startswith("ttcsd") for a in node.names)


def test_codes_match_package():
    for code in range(216):
        assert encode(Profile.decode(3, code).rankings()) == code
        assert tuple(decode(3, code)) == Profile.decode(3, code).rankings()


def test_valid_certificate(doc):
    assert replay(doc) == list(EX3_TTC)
    assert is_valid(doc)


def test_rule_callback(doc):
    table = ttc_table_rule(3)
    assert is_valid(doc, lambda c: matrix_to_doc(table.at(c))["rows"])
    assert not is_valid(doc, lambda c: [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]])


def _first(doc, kind):
    return next(s for s in doc["steps"] if s["kind"] == kind)


def _tampered(doc, edit):
    bad = copy.deepcopy(doc)
    edit(bad)
    return bad


@pytest.mark.parametrize(
    "edit",
    [
        lambda d: d["conclusion"].reverse(),
        lambda d: d.__setitem__("profile_code", d["profile_code"] + 1),
        lambda d: d["steps"].pop(0),
        lambda d: d["steps"].pop(),
        lambda d: d["steps"].insert(0, d["steps"].pop(1)),
        lambda d: _first(d, "CycleClosure").__setitem__("cycle", [2, 1, 3]),
        lambda d: _first(d, "CycleClosure").__setitem__("cycle", [1, 3]),
        lambda d: _first(d, "CycleEfficiency")["tops"][0].__setitem__("object", 3),
        lambda d: _first(d, "TopSpTransfer")["instances"][0].__setitem__("misreport_profile", 0),
        lambda d: _first(d, "TopSpTransfer").__setitem__("k", 2),
        lambda d: _first(d, "SingletonIr").__setitem__("upper_contour", [1, 3]),
        lambda d: _first(d, "InductionReduce").__setitem__("remaining", [1, 2, 3]),
        lambda d: _first(d, "CycleEfficiency").__setitem__("conclusions", []),
        lambda d: _first(d, "CycleClosure")["matrix"].reverse(),
        lambda d: _first(d, "CycleClosure").__setitem__("kind", "Lemma"),
        lambda d: _first(d, "TopSpTransfer").__setitem__("level", 1),
        lambda d: d.pop("steps"),
    ],
)
def test_tampering_is_caught(doc, edit):
    bad = _tampered(doc, edit)
    with pytest.raises(ReplayError):
        replay(bad)
    assert not is_valid(bad)


def test_inconsistent_matrices_for_one_profile(doc):
    # two steps at the same profile code must record the same matrix
    def edit(d):
        steps = [s for s in d["steps"] if s.get("profile") == d["profile_code"]]
        steps[0]["matrix"] = [["0", "1", "0"], ["0", "0", "1"], ["1", "0", "0"]]

    with pytest.raises(ReplayError):
        replay(_tampered(doc, edit))


def test_n2_branches_replay():
    table = ttc_table_rule(2)
    branches = set()
    for code in range(4):
        d = certificate_to_doc(derive_profile(Profile.decode(2, code), table))
        replay(d)
        branches.add(d["branch"])
    assert branches == {"distinct-tops", "shared-top"}
