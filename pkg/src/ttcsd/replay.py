"""Stand-alone re-checker for certificates in their JSON form.

Deliberately self-contained: it reimplements the little it needs (profile
codes, restriction, SD mass arithmetic) and imports nothing else from this
package, so a bug in the derivation engine cannot vouch for itself. It
re-validates every recorded instance of individual rationality, efficiency
and top-strategy-proofness, tracks which "agent gets object with
probability 1" facts have been established, and confirms they add up to the
stated conclusion.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Mapping


class ReplayError(Exception):
    pass


def _perm_index(ranking):
    n = len(ranking)
    left = list(range(1, n + 1))
    idx = 0
    for k, x in enumerate(ranking):
        pos = left.index(x)
        idx += pos * math.factorial(n - 1 - k)
        left.pop(pos)
    return idx


def _perm_at(n, idx):
    left = list(range(1, n + 1))
    out = []
    for k in range(n - 1, -1, -1):
        pos, idx = divmod(idx, math.factorial(k))
        out.append(left.pop(pos))
    return tuple(out)


def encode(rankings):
    base = math.factorial(len(rankings))
    code = 0
    for r in rankings:
        code = code * base + _perm_index(r)
    return code


def decode(n, code):
    base = math.factorial(n)
    digits = []
    for _ in range(n):
        code, d = divmod(code, base)
        digits.append(d)
    return [_perm_at(n, d) for d in reversed(digits)]


def _require(cond, message):
    if not cond:
        raise ReplayError(message)


def _matrix(rows, n):
    m = [[Fraction(v) for v in row] for row in rows]
    _require(len(m) == n and all(len(r) == n for r in m), "matrix has the wrong shape")
    _require(all(0 <= v <= 1 for r in m for v in r), "matrix entry outside [0,1]")
    _require(all(sum(r) == 1 for r in m), "matrix row does not sum to 1")
    _require(all(sum(r[j] for r in m) == 1 for j in range(n)), "matrix column does not sum to 1")
    return m


class _Replayer:
    def __init__(self, cert: Mapping, rule: Callable[[int], list] | None):
        self.cert = cert
        self.n = cert["n"]
        self.base = [tuple(r) for r in cert["profile"]]
        for r in self.base:
            _require(sorted(r) == list(range(1, self.n + 1)), "profile ranking is not a permutation")
        self.truth = encode(self.base)
        _require(cert.get("profile_code", self.truth) == self.truth, "profile code does not match profile")
        self.rule = rule
        self.facts: dict[tuple[int, int], int] = {}
        self.seen: dict[int, list] = {}
        self.closed: set[tuple[int, tuple]] = set()
        self.efficient: dict[tuple, int] = {}
        self.active = frozenset(range(1, self.n + 1))
        self.level = 0

    # helpers -------------------------------------------------------------

    def restrict(self, ranking, objects):
        return tuple(x for x in ranking if x in objects)

    def extend(self, sub: Mapping[int, tuple]):
        objects = self.active
        out = []
        for i, r in enumerate(self.base, start=1):
            if i in sub:
                fill = iter(sub[i])
                out.append(tuple(next(fill) if x in objects else x for x in r))
            else:
                out.append(r)
        return encode(out)

    def truth_sub(self):
        return {i: self.restrict(self.base[i - 1], self.active) for i in self.active}

    def load(self, step):
        code = step["profile"]
        m = _matrix(step["matrix"], self.n)
        if code in self.seen:
            _require(self.seen[code] == m, f"two different matrices recorded for profile {code}")
        self.seen[code] = m
        # projection onto the remaining agents and objects must itself be bi-stochastic
        for i in self.active:
            _require(
                sum(m[i - 1][x - 1] for x in range(1, self.n + 1) if x not in self.active) == 0,
                f"agent {i} has mass outside the sub-instance at profile {code}",
            )
        return code, m

    def establish(self, code, agent, obj, m):
        _require(m[agent - 1][obj - 1] == 1, f"agent {agent} does not get object {obj} at profile {code}")
        self.facts[(code, agent)] = obj

    def check_conclusions(self, step, expected):
        got = sorted((c["profile"], c["agent"], c["object"]) for c in step.get("conclusions", []))
        _require(got == sorted(expected), f"{step['kind']} records conclusions it did not derive")

    def check_scope(self, step):
        _require(step["level"] == self.level, "step level out of order")
        _require(sorted(step["active"]) == sorted(self.active), "step active set does not match")

    def cycle_of(self, step):
        cycle = tuple(step["cycle"])
        _require(len(cycle) >= 2 and len(set(cycle)) == len(cycle), "bad cycle")
        _require(set(cycle) <= self.active, "cycle leaves the sub-instance")
        truth = self.truth_sub()
        for a, b in zip(cycle, cycle[1:] + cycle[:1]):
            _require(truth[a][0] == b, f"agent {a} does not point at agent {b}")
        return cycle, truth

    def modified(self, truth, cycle):
        out = dict(truth)
        for i in cycle:
            r = truth[i]
            out[i] = (r[0], i) + tuple(x for x in r[1:] if x != i)
        return out

    # step kinds ----------------------------------------------------------

    def singleton_ir(self, step):
        self.check_scope(step)
        code, m = self.load(step)
        i = step["agent"]
        truth = self.truth_sub()
        _require(code == self.truth, "singleton step not at the reported profile")
        _require(tuple(step["ranking"]) == truth[i], "singleton ranking is not the restricted preference")
        _require(truth[i][0] == i, f"agent {i} does not top their own endowment")
        # upper contour set of the endowment in the sub-instance is the endowment alone
        _require(step["upper_contour"] == [i], "wrong upper contour set")
        self.establish(code, i, i, m)
        self.check_conclusions(step, [(code, i, i)])

    def cycle_closure(self, step):
        self.check_scope(step)
        code, m = self.load(step)
        cycle, truth = self.cycle_of(step)
        mod = self.modified(truth, cycle)
        for i in cycle:
            _require(tuple(step["original"][str(i)]) == truth[i], "original ranking mismatch")
            _require(tuple(step["modified"][str(i)]) == mod[i], "modified ranking mismatch")
        _require(code == self.extend(mod), "closure profile is not the modified profile")
        for inst in step["ir_instances"]:
            i = inst["agent"]
            contour = mod[i][:2]
            _require(tuple(inst["upper_contour"]) == contour, "wrong upper contour set")
            _require(sum(m[i - 1][x - 1] for x in contour) == 1, f"individual rationality fails for agent {i}")
        _require(sorted(inst["agent"] for inst in step["ir_instances"]) == sorted(cycle), "missing IR instances")
        pred = {b: a for a, b in zip(cycle, cycle[1:] + cycle[:1])}
        for pair in step["column_pairs"]:
            j = pair["object"]
            _require(pair["holders"] == [pred[j], j], "wrong column pair")
            _require(m[pred[j] - 1][j - 1] + m[j - 1][j - 1] == 1, f"object {j} leaks outside the cycle")
        _require(sorted(p["object"] for p in step["column_pairs"]) == sorted(cycle), "missing column pairs")
        self.closed.add((code, cycle))

    def cycle_efficiency(self, step):
        self.check_scope(step)
        code, m = self.load(step)
        cycle, truth = self.cycle_of(step)
        _require((code, cycle) in self.closed, "efficiency step without closure")
        mod = self.modified(truth, cycle)
        expected = []
        for t in step["tops"]:
            i = t["agent"]
            _require(t["object"] == mod[i][0], "wrong top object")
            # otherwise giving each cycle member their top would dominate
            self.establish(code, i, t["object"], m)
            expected.append((code, i, t["object"]))
        _require(sorted(t["agent"] for t in step["tops"]) == sorted(cycle), "missing cycle members")
        self.efficient[cycle] = code
        self.check_conclusions(step, expected)

    def top_sp_transfer(self, step):
        self.check_scope(step)
        code, m = self.load(step)
        cycle, truth = self.cycle_of(step)
        _require(cycle in self.efficient, "transfer step before efficiency step")
        mod = self.modified(truth, cycle)
        restored = tuple(step["restored"])
        _require(restored and set(restored) <= set(cycle), "bad restored set")
        current = dict(mod)
        for r in restored:
            current[r] = truth[r]
        for i in cycle:
            _require(tuple(step["rankings"][str(i)]) == current[i], "ranking mismatch in transfer step")
        _require(code == self.extend(current), "transfer profile mismatch")
        _require(step["k"] == len(restored), "k is not the number of restored agents")
        expected = []
        for inst in step["instances"]:
            r = inst["agent"]
            top = truth[r][0]
            _require(inst["object"] == top, "top-SP instance names the wrong object")
            lie = dict(current)
            lie[r] = mod[r]
            before = self.extend(lie)
            _require(inst["misreport_profile"] == before, "misreport profile mismatch")
            _require(self.facts.get((before, r)) == top, f"premise for agent {r} not established")
            # truthful probability of the top must be at least the misreport's, which is 1
            _require(m[r - 1][top - 1] >= 1, f"top-strategy-proofness fails for agent {r}")
            self.establish(code, r, top, m)
            expected.append((code, r, top))
        _require(sorted(inst["agent"] for inst in step["instances"]) == sorted(restored), "missing instances")
        for prop in step["propagation"]:
            u = prop["agent"]
            _require(u in cycle and u not in restored, "propagation to a restored agent")
            top = mod[u][0]
            _require(tuple(prop["upper_contour"]) == (top, u), "wrong upper contour set")
            _require(self.facts.get((code, prop["taken_by"])) == u, f"agent {u}'s endowment not known to be taken")
            _require(m[u - 1][top - 1] + m[u - 1][u - 1] == 1, f"individual rationality fails for agent {u}")
            self.establish(code, u, top, m)
            expected.append((code, u, top))
        covered = set(restored) | {p["agent"] for p in step["propagation"]}
        _require(covered == set(cycle), "transfer step leaves cycle members undetermined")
        self.check_conclusions(step, expected)

    def induction_reduce(self, step):
        self.check_scope(step)
        removed = {r["agent"] for r in step["removed"]}
        for r in step["removed"]:
            _require(self.facts.get((self.truth, r["agent"])) == r["object"], f"agent {r['agent']} not settled")
        remaining = self.active - removed
        _require(sorted(step["remaining"]) == sorted(remaining) and remaining, "bad remaining set")
        self.active = frozenset(remaining)
        self.level += 1

    def run(self):
        handlers = {
            "SingletonIr": self.singleton_ir,
            "CycleClosure": self.cycle_closure,
            "CycleEfficiency": self.cycle_efficiency,
            "TopSpTransfer": self.top_sp_transfer,
            "InductionReduce": self.induction_reduce,
        }
        for step in self.cert["steps"]:
            handler = handlers.get(step["kind"])
            _require(handler is not None, f"unknown step kind {step['kind']!r}")
            handler(step)
        got = [self.facts.get((self.truth, i)) for i in range(1, self.n + 1)]
        _require(None not in got, "some agent's assignment was never derived")
        _require(sorted(got) == list(range(1, self.n + 1)), "derived assignment is not a permutation")
        concl = _matrix(self.cert["conclusion"], self.n)
        _require(all(concl[i][got[i] - 1] == 1 for i in range(self.n)), "conclusion differs from derivation")
        _require(self.seen.get(self.truth) == concl, "recorded rule output differs from conclusion")
        if self.rule is not None:
            for code, m in self.seen.items():
                _require([[Fraction(v) for v in row] for row in self.rule(code)] == m, f"rule disagrees at {code}")
        return got


def replay(cert: Mapping, rule: Callable[[int], list] | None = None) -> list[int]:
    """Re-validate ``cert``; return the derived object per agent or raise :class:`ReplayError`.

    ``rule``, when given, maps a profile code to matrix rows and is used to
    confirm every recorded rule output.
    """
    try:
        return _Replayer(cert, rule).run()
    except (KeyError, TypeError, ValueError) as exc:
        raise ReplayError(f"malformed certificate: {exc!r}") from exc


def is_valid(cert: Mapping, rule: Callable[[int], list] | None = None) -> bool:
    try:
        replay(cert, rule)
    except ReplayError:
        return False
    return True
