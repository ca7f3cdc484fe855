"""Decision procedures for the four axioms.

SD-efficiency is decided two independent ways: by acyclicity of the
object-level "someone holding y would rather have x" relation, and by an
exact-rational LP that maximises total SD slack over all bi-stochastic
matrices. Callers choose with ``method=``; tests insist they agree.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import kernels
from .core import ONE, ZERO, AgentId, AssignmentMatrix, ObjectId, Preference, Profile, degenerate
from .rules import Rule, TableRule, tabulate
from .sd import Relation, cumulative, sd_compare, sd_dominates_degenerate
from .simplex import OPTIMAL, maximise

EXHAUSTION_BOUND = 4


class Axiom(enum.Enum):
    SD_EFFICIENCY = "SdEfficiency"
    SD_INDIVIDUAL_RATIONALITY = "SdIndividualRationality"
    SD_STRATEGY_PROOFNESS = "SdStrategyProofness"
    SD_TOP_STRATEGY_PROOFNESS = "SdTopStrategyProofness"


@dataclass(frozen=True)
class Counterexample:
    profile: Profile
    agent: AgentId
    misreport: Preference | None = None
    witness: ObjectId | None = None
    # a matrix the agent (or everyone, for efficiency) prefers to ``observed``
    dominating: AssignmentMatrix | None = None
    observed: AssignmentMatrix | None = None


@dataclass(frozen=True)
class AxiomReport:
    axiom: Axiom
    holds: bool
    counterexample: Counterexample | None = None
    # number of elementary comparisons that were checked
    checked: int = 0

    def __post_init__(self) -> None:
        if not self.holds and self.counterexample is None:
            raise ValueError("a failing report needs a counterexample")


class ExhaustionBoundError(ValueError):
    pass


def sd_pareto_dominates(profile: Profile, better: AssignmentMatrix, worse: AssignmentMatrix) -> bool:
    """True iff every agent weakly prefers ``better`` and someone strictly prefers it."""
    strict = False
    for i, p in enumerate(profile, start=1):
        rel = sd_compare(p, better.row(i), worse.row(i)).relation
        if rel is Relation.STRICTLY_PREFERRED:
            strict = True
        elif rel is not Relation.EQUIVALENT:
            return False
    return strict


def _strict_witness(profile: Profile, better: AssignmentMatrix, worse: AssignmentMatrix) -> tuple[AgentId, ObjectId]:
    for i, p in enumerate(profile, start=1):
        v = sd_compare(p, better.row(i), worse.row(i))
        if v.relation is Relation.STRICTLY_PREFERRED:
            return i, v.witness
    raise ValueError("no agent strictly prefers the dominating matrix")


def check_sd_ir(profile: Profile, matrix: AssignmentMatrix) -> AxiomReport:
    n = profile.n
    for i, p in enumerate(profile, start=1):
        row = matrix.row(i)
        if not sd_dominates_degenerate(p, row, i):
            verdict = sd_compare(p, row, degenerate(n, i))
            cx = Counterexample(profile, i, witness=verdict.witness, dominating=AssignmentMatrix.identity(n), observed=matrix)
            return AxiomReport(Axiom.SD_INDIVIDUAL_RATIONALITY, False, cx, checked=i)
    return AxiomReport(Axiom.SD_INDIVIDUAL_RATIONALITY, True, checked=n)


# -- SD-efficiency -----------------------------------------------------------


def improvement_edges(profile: Profile, matrix: AssignmentMatrix) -> dict[ObjectId, dict[ObjectId, AgentId]]:
    """``edges[y][x] = i``: agent ``i`` holds part of ``y`` and strictly prefers ``x``.

    ``i`` is the smallest such agent.
    """
    n = profile.n
    edges: dict[ObjectId, dict[ObjectId, AgentId]] = {y: {} for y in range(1, n + 1)}
    for i, p in enumerate(profile, start=1):
        row = matrix.row(i)
        for y in range(1, n + 1):
            if row[y - 1] > 0:
                for x in p.ranking[: p.rank(y) - 1]:
                    edges[y].setdefault(x, i)
    return edges


def find_improvement_cycle(edges: dict[ObjectId, dict[ObjectId, AgentId]]) -> list[tuple[ObjectId, ObjectId, AgentId]] | None:
    """A simple cycle of the improvement relation as ``(from, to, agent)`` triples."""
    state: dict[ObjectId, int] = {}
    for start in sorted(edges):
        if start in state:
            continue
        # iterative DFS keeping the current path
        path: list[ObjectId] = [start]
        iters = [iter(sorted(edges[start]))]
        state[start] = 1
        while path:
            nxt = next(iters[-1], None)
            if nxt is None:
                state[path.pop()] = 2
                iters.pop()
                continue
            if state.get(nxt) == 1:
                loop = path[path.index(nxt):] + [nxt]
                return [(a, b, edges[a][b]) for a, b in zip(loop, loop[1:])]
            if nxt not in state:
                state[nxt] = 1
                path.append(nxt)
                iters.append(iter(sorted(edges[nxt])))
    return None


def trade_along_cycle(matrix: AssignmentMatrix, cycle: Sequence[tuple[ObjectId, ObjectId, AgentId]]) -> AssignmentMatrix:
    """Each agent on the cycle shifts the same mass from its held object to the one it prefers."""
    eps = min(matrix[i, y] for y, _, i in cycle)
    rows = [list(r) for r in matrix.entries]
    for y, x, i in cycle:
        rows[i - 1][y - 1] -= eps
        rows[i - 1][x - 1] += eps
    return AssignmentMatrix(tuple(tuple(r) for r in rows))


def lp_dominance(profile: Profile, matrix: AssignmentMatrix) -> tuple[Fraction, AssignmentMatrix]:
    """Maximum total SD slack any bi-stochastic matrix has over ``matrix``.

    Returns the optimum and an optimal matrix. The optimum is zero exactly
    when nothing SD-dominates ``matrix``.
    """
    n = profile.n
    nv = n * n
    c = [ZERO] * nv
    a_ub, b_ub = [], []
    baseline = ZERO
    for i, p in enumerate(profile):
        cum = cumulative(p, matrix.row(i + 1))
        for k in range(1, n):
            coef = [ZERO] * nv
            for x in p.ranking[:k]:
                coef[i * n + x - 1] = Fraction(-1)
                c[i * n + x - 1] += 1
            a_ub.append(coef)
            b_ub.append(-cum[k - 1])
            baseline += cum[k - 1]
    a_eq, b_eq = [], []
    for i in range(n):
        a_eq.append([ONE if v // n == i else ZERO for v in range(nv)])
        b_eq.append(ONE)
    for j in range(n):
        a_eq.append([ONE if v % n == j else ZERO for v in range(nv)])
        b_eq.append(ONE)
    res = maximise(c, a_ub, b_ub, a_eq, b_eq)
    if res.status != OPTIMAL:
        raise RuntimeError(f"dominance LP ended {res.status}; the current matrix is always feasible")
    best = AssignmentMatrix(tuple(tuple(res.x[i * n:(i + 1) * n]) for i in range(n)))
    return res.value - baseline, best


def check_sd_efficient(profile: Profile, matrix: AssignmentMatrix, method: str = "acyclic") -> AxiomReport:
    """Is ``matrix`` undominated at ``profile``? ``method`` is ``"acyclic"`` or ``"lp"``."""
    if method == "acyclic":
        cycle = find_improvement_cycle(improvement_edges(profile, matrix))
        if cycle is None:
            return AxiomReport(Axiom.SD_EFFICIENCY, True, checked=1)
        better = trade_along_cycle(matrix, cycle)
    elif method == "lp":
        slack, better = lp_dominance(profile, matrix)
        if slack == 0:
            return AxiomReport(Axiom.SD_EFFICIENCY, True, checked=1)
    else:
        raise ValueError(f"unknown method {method!r}")
    agent, witness = _strict_witness(profile, better, matrix)
    cx = Counterexample(profile, agent, witness=witness, dominating=better, observed=matrix)
    return AxiomReport(Axiom.SD_EFFICIENCY, False, cx, checked=1)


def all_permutation_matrices(n: int) -> list[AssignmentMatrix]:
    return [AssignmentMatrix.from_permutation(p) for p in itertools.permutations(range(1, n + 1))]


def dominating_permutation(profile: Profile, matrix: AssignmentMatrix) -> AssignmentMatrix | None:
    """First permutation matrix (lexicographic) that SD-dominates ``matrix``."""
    for cand in all_permutation_matrices(profile.n):
        if sd_pareto_dominates(profile, cand, matrix):
            return cand
    return None


def pareto_efficient_ir_assignments(profile: Profile) -> list[AssignmentMatrix]:
    """Deterministic assignments that are individually rational and undominated."""
    if profile.n > EXHAUSTION_BOUND:
        raise ExhaustionBoundError(f"n={profile.n} exceeds the exhaustion bound {EXHAUSTION_BOUND}")
    return [
        m
        for m in all_permutation_matrices(profile.n)
        if check_sd_ir(profile, m).holds and check_sd_efficient(profile, m).holds
    ]


# -- strategy-proofness ------------------------------------------------------


def _check_bound(n: int, bound: int) -> None:
    if n > bound:
        raise ExhaustionBoundError(f"n={n} exceeds the exhaustion bound {bound}")


def _manipulation_scan(rule: Rule, n: int, top_only: bool, bound: int) -> AxiomReport:
    _check_bound(n, bound)
    axiom = Axiom.SD_TOP_STRATEGY_PROOFNESS if top_only else Axiom.SD_STRATEGY_PROOFNESS
    table = tabulate(rule, n)
    base = math.factorial(n)
    size = base**n
    checked = size * n * (base - 1)
    if table.is_deterministic():
        _, ranks = kernels.permutation_tables(n)
        _, first = kernels.scan_sp(table.permutation_table(), ranks, n, top_only)
        if first is None:
            return AxiomReport(axiom, True, checked=checked)
        code, agent, digit, _ = first
        return AxiomReport(axiom, False, _sp_counterexample(table, n, code, agent + 1, digit, top_only), checked)
    first = _first_manipulation(table, n, top_only, range(size))
    if first is None:
        return AxiomReport(axiom, True, checked=checked)
    code, agent, digit = first
    return AxiomReport(axiom, False, _sp_counterexample(table, n, code, agent, digit, top_only), checked)


def _profitable(pref: Preference, truth: Sequence[Fraction], lie: Sequence[Fraction], top_only: bool) -> bool:
    if top_only:
        return lie[pref.top - 1] > truth[pref.top - 1]
    return not sd_compare(pref, truth, lie).weakly_prefers


def _first_manipulation(table: TableRule, n: int, top_only: bool, codes) -> tuple[int, AgentId, int] | None:
    base = math.factorial(n)
    weights = [base ** (n - 1 - i) for i in range(n)]
    prefs = [Preference.from_index(n, d) for d in range(base)]
    for code in codes:
        truth = table.at(code)
        for i in range(n):
            w = weights[i]
            d = code // w % base
            pref = prefs[d]
            row = truth.row(i + 1)
            if row[pref.top - 1] == ONE:
                continue
            offset = code - d * w
            for m in range(base):
                if m != d and _profitable(pref, row, table.at(offset + m * w).row(i + 1), top_only):
                    return code, i + 1, m
    return None


def _sp_counterexample(table: TableRule, n: int, code: int, agent: AgentId, digit: int, top_only: bool) -> Counterexample:
    profile = Profile.decode(n, code)
    lie = Preference.from_index(n, digit)
    observed = table.at(code)
    dominating = table.at(profile.replace(agent, lie).encode())
    pref = profile[agent]
    if top_only:
        witness = pref.top
    else:
        witness = sd_compare(pref, dominating.row(agent), observed.row(agent)).witness
    return Counterexample(profile, agent, lie, witness, dominating, observed)


def check_sd_sp(rule: Rule, n: int, bound: int = EXHAUSTION_BOUND) -> AxiomReport:
    """Exhaustive SD-strategy-proofness over every profile, agent and misreport."""
    return _manipulation_scan(rule, n, False, bound)


def check_sd_top_sp(rule: Rule, n: int, bound: int = EXHAUSTION_BOUND) -> AxiomReport:
    """Exhaustive check that no misreport raises the probability of the true top."""
    return _manipulation_scan(rule, n, True, bound)


def reverify(report: AxiomReport, rule: Rule | None = None) -> bool:
    """Re-run the single comparison a failing report names; True iff it still fails.

    With ``rule`` the observed and dominating matrices are recomputed from it
    instead of trusted from the report.
    """
    cx = report.counterexample
    if report.holds or cx is None:
        return False
    profile, agent = cx.profile, cx.agent
    pref = profile[agent]
    observed = rule(profile) if rule is not None else cx.observed
    if report.axiom is Axiom.SD_INDIVIDUAL_RATIONALITY:
        return not sd_dominates_degenerate(pref, observed.row(agent), agent)
    if report.axiom is Axiom.SD_EFFICIENCY:
        return sd_pareto_dominates(profile, cx.dominating, observed)
    lied = profile.replace(agent, cx.misreport)
    dominating = rule(lied) if rule is not None else cx.dominating
    top_only = report.axiom is Axiom.SD_TOP_STRATEGY_PROOFNESS
    return _profitable(pref, observed.row(agent), dominating.row(agent), top_only)
