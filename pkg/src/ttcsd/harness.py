"""Exhaustive batch runs over the whole profile space.

Profiles are identified by their code (see :meth:`Profile.encode`), so work
is split into contiguous code ranges and merged deterministically: counts
add, and the reported counterexample for each axiom is the one with the
smallest code.
"""

from __future__ import annotations

import math
import os
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterator, Mapping

from . import kernels
from .checkers import (
    EXHAUSTION_BOUND,
    Axiom,
    ExhaustionBoundError,
    _first_manipulation,
    _sp_counterexample,
    check_sd_efficient,
    check_sd_ir,
    pareto_efficient_ir_assignments,
)
from .core import AssignmentMatrix, Preference, Profile
from .derivation import DerivationError, derive_profile
from .io import certificate_to_doc, matrix_to_doc, profile_to_doc
from .replay import ReplayError, replay
from .rules import PermutationTableRule, Rule, TableRule, tabulate, ttc_rule, ttc_table_rule

UNIQUENESS_BOUND = 3


class ProfileSpace:
    """All ``(n!)**n`` profiles of size ``n`` in lexicographic order."""

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("n must be at least 2")
        self.n = n
        self.base = math.factorial(n)

    def __len__(self) -> int:
        return self.base**self.n

    def __iter__(self) -> Iterator[Profile]:
        for code in range(len(self)):
            yield Profile.decode(self.n, code)

    def profile(self, code: int) -> Profile:
        return Profile.decode(self.n, code)

    def index(self, profile: Profile) -> int:
        return profile.encode()

    def chunks(self, parts: int) -> list[tuple[int, int]]:
        size = len(self)
        parts = max(1, min(parts, size))
        step = -(-size // parts)
        return [(lo, min(lo + step, size)) for lo in range(0, size, step)]


@dataclass
class BatchResult:
    task: str
    n: int
    space_size: int
    rule: str
    counts: dict[str, dict[str, int]] = field(default_factory=dict)
    counterexamples: list[dict] = field(default_factory=list)
    certificates: dict[str, Any] = field(default_factory=dict)
    uniqueness: dict[str, Any] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if any(c["fail"] for c in self.counts.values()):
            return False
        if self.uniqueness and not self.uniqueness.get("unique_and_ttc"):
            return False
        return True

    def payload(self) -> dict:
        """Everything except wall-clock metadata; identical across runs."""
        doc = {
            "task": self.task,
            "n": self.n,
            "space_size": self.space_size,
            "rule": self.rule,
            "passed": self.passed,
            "counts": self.counts,
            "counterexamples": self.counterexamples,
        }
        if self.certificates:
            doc["certificates"] = self.certificates
        if self.uniqueness:
            doc["uniqueness"] = self.uniqueness
        return doc

    def to_doc(self) -> dict:
        return {**self.payload(), "metadata": self.metadata}

    def summary(self) -> str:
        parts = [f"{name}: {c['pass']}/{c['pass'] + c['fail']} pass" for name, c in self.counts.items()]
        return f"{self.task} n={self.n} rule={self.rule}: " + "; ".join(parts)


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("TTCSD_JOBS", "1")))
    except ValueError:
        return 1


def _run_chunks(func, chunks, jobs: int, *args):
    if jobs <= 1 or len(chunks) <= 1:
        return [func(lo, hi, *args) for lo, hi in chunks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(func, lo, hi, *args) for lo, hi in chunks]
        return [f.result() for f in futures]


def _rule_name(rule: Rule) -> str:
    name = getattr(rule, "name", None) or getattr(rule, "__name__", "rule")
    return name.removesuffix("_rule").replace("_", "-")


def _cx_doc(axiom: Axiom, cx) -> dict:
    return {
        "axiom": axiom.value,
        "profile_code": cx.profile.encode(),
        "profile": profile_to_doc(cx.profile)["preferences"],
        "agent": cx.agent,
        "misreport": list(cx.misreport.ranking) if cx.misreport else None,
        "witness": cx.witness,
        "dominating": matrix_to_doc(cx.dominating)["rows"] if cx.dominating else None,
        "observed": matrix_to_doc(cx.observed)["rows"] if cx.observed else None,
    }


# -- axioms -----------------------------------------------------------------


def _axiom_chunk_fast(lo: int, hi: int, table, n: int) -> dict:
    _, ranks = kernels.permutation_tables(n)
    ir_fail, first_ir, eff_fail, first_eff = kernels.scan_ir_eff(table, ranks, n, lo, hi)
    sp_fail, first_sp = kernels.scan_sp(table, ranks, n, False, lo, hi)
    top_fail, first_top = kernels.scan_sp(table, ranks, n, True, lo, hi)
    return {
        Axiom.SD_INDIVIDUAL_RATIONALITY: (ir_fail, first_ir[0] if first_ir else None),
        Axiom.SD_EFFICIENCY: (eff_fail, first_eff),
        Axiom.SD_STRATEGY_PROOFNESS: (sp_fail, first_sp and first_sp[0]),
        Axiom.SD_TOP_STRATEGY_PROOFNESS: (top_fail, first_top and first_top[0]),
    }


def _axiom_chunk_generic(lo: int, hi: int, table: TableRule, n: int, method: str) -> dict:
    out = {a: [0, None] for a in Axiom}
    for code in range(lo, hi):
        profile = Profile.decode(n, code)
        matrix = table.at(code)
        checks = {
            Axiom.SD_INDIVIDUAL_RATIONALITY: check_sd_ir(profile, matrix).holds,
            Axiom.SD_EFFICIENCY: check_sd_efficient(profile, matrix, method).holds,
            Axiom.SD_STRATEGY_PROOFNESS: _first_manipulation(table, n, False, [code]) is None,
            Axiom.SD_TOP_STRATEGY_PROOFNESS: _first_manipulation(table, n, True, [code]) is None,
        }
        for axiom, ok in checks.items():
            if not ok:
                out[axiom][0] += 1
                if out[axiom][1] is None:
                    out[axiom][1] = code
    return {a: tuple(v) for a, v in out.items()}


def verify_axioms(
    n: int,
    rule: Rule = ttc_rule,
    jobs: int = 1,
    method: str = "acyclic",
    force_generic: bool = False,
) -> BatchResult:
    """Check all four axioms for ``rule`` at every profile of size ``n``.

    Deterministic rules go through the scan kernels unless ``force_generic``;
    other rules use the exact-rational checkers with the given efficiency
    ``method``. A profile fails an incentive axiom if some agent there has a
    profitable misreport.
    """
    if n > EXHAUSTION_BOUND:
        raise ExhaustionBoundError(f"n={n} exceeds the exhaustion bound {EXHAUSTION_BOUND}")
    start = time.perf_counter()
    table = tabulate(rule, n)
    space = ProfileSpace(n)
    chunks = space.chunks(jobs)
    if table.is_deterministic() and not force_generic:
        parts = _run_chunks(_axiom_chunk_fast, chunks, jobs, table.permutation_table(), n)
    else:
        parts = _run_chunks(_axiom_chunk_generic, chunks, jobs, table, n, method)
    result = BatchResult("verify-axioms", n, len(space), _rule_name(rule))
    order = [
        Axiom.SD_INDIVIDUAL_RATIONALITY,
        Axiom.SD_EFFICIENCY,
        Axiom.SD_STRATEGY_PROOFNESS,
        Axiom.SD_TOP_STRATEGY_PROOFNESS,
    ]
    for axiom in order:
        fails = sum(p[axiom][0] for p in parts)
        firsts = [p[axiom][1] for p in parts if p[axiom][1] is not None]
        result.counts[axiom.value] = {"pass": len(space) - fails, "fail": fails}
        if firsts:
            result.counterexamples.append(_cx_doc(axiom, _axiom_counterexample(table, n, axiom, min(firsts), method)))
    result.metadata = {
        "wall_clock_seconds": round(time.perf_counter() - start, 3),
        "jobs": jobs,
        "backend": kernels.BACKEND,
    }
    return result


def _axiom_counterexample(table: TableRule, n: int, axiom: Axiom, code: int, method: str):
    profile = Profile.decode(n, code)
    matrix = table.at(code)
    if axiom is Axiom.SD_INDIVIDUAL_RATIONALITY:
        return check_sd_ir(profile, matrix).counterexample
    if axiom is Axiom.SD_EFFICIENCY:
        return check_sd_efficient(profile, matrix, method).counterexample
    top_only = axiom is Axiom.SD_TOP_STRATEGY_PROOFNESS
    _, agent, digit = _first_manipulation(table, n, top_only, [code])
    return _sp_counterexample(table, n, code, agent, digit, top_only)


def verify_ttc_axioms(n: int, jobs: int = 1) -> BatchResult:
    return verify_axioms(n, ttc_rule, jobs)


# -- deterministic uniqueness search ----------------------------------------


class _UniquenessSearch:
    """Deterministic rules choosing an efficient, IR assignment at each profile
    and never letting a misreport secure the misreporter's true top."""

    def __init__(self, n: int):
        self.n = n
        self.base = math.factorial(n)
        self.size = self.base**n
        self.weights = [self.base ** (n - 1 - i) for i in range(n)]
        self.tops = [Preference.from_index(n, d).top for d in range(self.base)]
        self.domains: list[tuple[tuple[int, ...], ...]] = []
        for code in range(self.size):
            cands = pareto_efficient_ir_assignments(Profile.decode(n, code))
            self.domains.append(tuple(m.to_permutation() for m in cands))
        self.nodes = 0

    def digit(self, code: int, agent: int) -> int:
        return code // self.weights[agent] % self.base

    def neighbours(self, code: int) -> Iterator[tuple[int, int]]:
        for i in range(self.n):
            w = self.weights[i]
            d = code // w % self.base
            offset = code - d * w
            for m in range(self.base):
                if m != d:
                    yield offset + m * w, i

    def compatible(self, code: int, v, other: int, w, agent: int) -> bool:
        t = self.tops[self.digit(code, agent)]
        s = self.tops[self.digit(other, agent)]
        # truthful at code, lying to other, or the reverse
        if w[agent] == t and v[agent] != t:
            return False
        if v[agent] == s and w[agent] != s:
            return False
        return True

    def propagate(self, domains: list[tuple], queue: list[int]) -> bool:
        """Arc consistency; False on a wiped-out domain."""
        pending = set(queue)
        queue = list(queue)
        while queue:
            other = queue.pop()
            pending.discard(other)
            for code, agent in self.neighbours(other):
                dom = domains[code]
                keep = tuple(
                    v for v in dom if any(self.compatible(code, v, other, w, agent) for w in domains[other])
                )
                if len(keep) != len(dom):
                    if not keep:
                        return False
                    domains[code] = keep
                    if code not in pending:
                        pending.add(code)
                        queue.append(code)
        return True

    def solve(self, force: Mapping[int, tuple[int, ...]] | None = None, limit: int = 2) -> list[list[tuple]]:
        domains = list(self.domains)
        touched = list(range(self.size))
        for code, value in (force or {}).items():
            if value not in domains[code]:
                return []
            domains[code] = (value,)
        if not self.propagate(domains, touched):
            return []
        solutions: list[list[tuple]] = []
        self._search(domains, solutions, limit)
        return solutions

    def _search(self, domains: list[tuple], solutions: list, limit: int) -> None:
        self.nodes += 1
        open_vars = [c for c in range(self.size) if len(domains[c]) > 1]
        if not open_vars:
            solutions.append([d[0] for d in domains])
            return
        code = min(open_vars, key=lambda c: (len(domains[c]), c))
        for value in domains[code]:
            trial = list(domains)
            trial[code] = (value,)
            if self.propagate(trial, [code]):
                self._search(trial, solutions, limit)
                if len(solutions) >= limit:
                    return


def verify_uniqueness_deterministic(
    n: int,
    force: Mapping[int, tuple[int, ...]] | None = None,
    limit: int = 2,
) -> BatchResult:
    """Search every deterministic efficient, IR, top-strategy-proof rule.

    ``force`` pins the rule's assignment (objects per agent) at given
    profile codes. The search stops after ``limit`` survivors, so a count
    below ``limit`` is exact.
    """
    if n > UNIQUENESS_BOUND:
        raise ExhaustionBoundError(f"n={n} exceeds the uniqueness search bound {UNIQUENESS_BOUND}")
    start = time.perf_counter()
    search = _UniquenessSearch(n)
    solutions = search.solve(force, limit)
    ttc = kernels.ttc_table(n)
    ttc_rows = [tuple(int(x) + 1 for x in row) for row in ttc]
    equal = [sol == ttc_rows for sol in solutions]
    sizes = Counter(len(d) for d in search.domains)
    result = BatchResult("verify-uniqueness", n, search.size, "deterministic-search")
    if len(solutions) == 1:
        mismatches = sum(1 for a, b in zip(solutions[0], ttc_rows) if a != b)
        result.counts["SurvivorEqualsTtc"] = {"pass": search.size - mismatches, "fail": mismatches}
    result.uniqueness = {
        "survivors": len(solutions),
        "survivor_limit": limit,
        "exact": len(solutions) < limit,
        "unique_and_ttc": len(solutions) == 1 and equal[0],
        "survivors_equal_ttc": equal,
        "candidate_histogram": {str(k): v for k, v in sorted(sizes.items())},
        "forced": {str(k): list(v) for k, v in sorted((force or {}).items())},
        "search_nodes": search.nodes,
    }
    result.metadata = {"wall_clock_seconds": round(time.perf_counter() - start, 3), "jobs": 1}
    return result


# -- certificates -----------------------------------------------------------


def _oracle(rule: Rule, n: int) -> Rule:
    if rule is ttc_rule:
        return ttc_table_rule(n)
    return rule


def _certify_chunk(lo: int, hi: int, rule: Rule, n: int, keep: bool) -> dict:
    steps: Counter = Counter()
    branches: Counter = Counter()
    failures = []
    docs = []
    emitted = valid = 0
    for code in range(lo, hi):
        profile = Profile.decode(n, code)
        try:
            cert = derive_profile(profile, rule)
        except DerivationError as exc:
            failures.append({"profile_code": code, "step": exc.kind, "axiom": exc.axiom, "message": str(exc)})
            continue
        emitted += 1
        doc = certificate_to_doc(cert)

        def recorded(c: int) -> list:
            return matrix_to_doc(rule(Profile.decode(n, c)))["rows"]

        try:
            replay(doc, recorded)
            valid += 1
        except ReplayError as exc:
            failures.append({"profile_code": code, "step": "replay", "axiom": None, "message": str(exc)})
        steps.update(s.kind for s in cert.steps)
        if cert.branch:
            branches[cert.branch] += 1
        if keep:
            docs.append(doc)
    return {
        "emitted": emitted,
        "valid": valid,
        "steps": steps,
        "branches": branches,
        "failures": failures,
        "docs": docs,
    }


def certify_all(n: int, rule: Rule = ttc_rule, jobs: int = 1, keep: bool = False) -> tuple[BatchResult, list[dict]]:
    """Derive and independently replay a certificate at every profile.

    Returns the batch result and, with ``keep``, the certificate documents.
    """
    if n > EXHAUSTION_BOUND:
        raise ExhaustionBoundError(f"n={n} exceeds the exhaustion bound {EXHAUSTION_BOUND}")
    start = time.perf_counter()
    space = ProfileSpace(n)
    oracle = _oracle(rule, n)
    parts = _run_chunks(_certify_chunk, space.chunks(jobs), jobs, oracle, n, keep)
    emitted = sum(p["emitted"] for p in parts)
    valid = sum(p["valid"] for p in parts)
    steps: Counter = sum((p["steps"] for p in parts), Counter())
    branches: Counter = sum((p["branches"] for p in parts), Counter())
    failures = sorted((f for p in parts for f in p["failures"]), key=lambda f: f["profile_code"])
    result = BatchResult("certify", n, len(space), _rule_name(rule))
    result.counts["Certified"] = {"pass": valid, "fail": len(space) - valid}
    result.counterexamples = failures
    result.certificates = {
        "emitted": emitted,
        "replay_valid": valid,
        "steps": dict(sorted(steps.items())),
        "branches": dict(sorted(branches.items())),
    }
    result.metadata = {"wall_clock_seconds": round(time.perf_counter() - start, 3), "jobs": jobs}
    docs = [d for p in parts for d in p["docs"]]
    return result, docs


def random_bistochastic(n: int, rng, max_terms: int = 3, max_weight: int = 6) -> AssignmentMatrix:
    """Exact convex combination of 1..``max_terms`` random permutation matrices."""
    terms = rng.randint(1, max_terms)
    weights = [rng.randint(1, max_weight) for _ in range(terms)]
    total = sum(weights)
    rows = [[0] * n for _ in range(n)]
    for w in weights:
        perm = list(range(n))
        rng.shuffle(perm)
        for i, j in enumerate(perm):
            rows[i][j] += w
    return AssignmentMatrix(tuple(tuple(Fraction(v, total) for v in row) for row in rows))


def random_profile(n: int, rng) -> Profile:
    return Profile.decode(n, rng.randrange(math.factorial(n) ** n))


__all__ = [
    "BatchResult",
    "PermutationTableRule",
    "ProfileSpace",
    "certify_all",
    "default_jobs",
    "random_bistochastic",
    "random_profile",
    "verify_axioms",
    "verify_ttc_axioms",
    "verify_uniqueness_deterministic",
]
