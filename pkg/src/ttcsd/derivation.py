"""Replays the uniqueness argument for TTC, profile by profile.

Given a rule and a profile, the engine derives from SD-individual
rationality, SD-efficiency and SD-top-strategy-proofness alone that the
rule's output must be the TTC assignment, querying the rule only at the
auxiliary profiles the argument needs. Every inference is recorded as a
:class:`DerivationStep` whose payload is plain JSON data, so a
:class:`Certificate` can be re-checked by :mod:`ttcsd.replay` without this
module.

Level ``t`` works on the sub-instance of agents still unassigned after the
first ``t`` TTC rounds. A sub-profile over the remaining objects is turned
into a full profile by keeping every removed agent's reported preference and
reordering each remaining agent's preference within the slots occupied by
remaining objects; the sub-rule is the full rule at that profile projected
onto remaining agents and objects.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .core import ONE, AgentId, AssignmentMatrix, ObjectId, Preference, Profile, format_rational
from .rules import Rule
from .ttc import Cycle, build_graph, find_cycles, ttc_assignment

SINGLETON_IR = "SingletonIr"
CYCLE_CLOSURE = "CycleClosure"
CYCLE_EFFICIENCY = "CycleEfficiency"
TOP_SP_TRANSFER = "TopSpTransfer"
INDUCTION_REDUCE = "InductionReduce"
STEP_KINDS = (SINGLETON_IR, CYCLE_CLOSURE, CYCLE_EFFICIENCY, TOP_SP_TRANSFER, INDUCTION_REDUCE)

EXTENSION_CONVENTION = (
    "removed agents keep their reported preferences; each remaining agent's "
    "sub-preference is written into the positions held by remaining objects"
)
INDUCTION_NOTE = (
    "the induction hypothesis is applied to the projected sub-rule using "
    "SD-top-strategy-proofness (not full SD-strategy-proofness)"
)

Rankings = Mapping[AgentId, tuple[ObjectId, ...]]


@dataclass(frozen=True)
class DerivationStep:
    kind: str
    payload: dict

    def __post_init__(self) -> None:
        if self.kind not in STEP_KINDS:
            raise ValueError(f"unknown step kind {self.kind!r}")


@dataclass(frozen=True)
class Certificate:
    profile: Profile
    steps: tuple[DerivationStep, ...]
    conclusion: AssignmentMatrix
    rule: str = "rule"
    # for n = 2: "distinct-tops" or "shared-top"
    branch: str | None = None
    notes: tuple[str, ...] = field(default=(EXTENSION_CONVENTION, INDUCTION_NOTE))


class DerivationError(Exception):
    """A step of the argument failed; ``axiom`` names what the rule must violate."""

    def __init__(self, kind: str, axiom: str, message: str, **detail):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.axiom = axiom
        self.detail = detail


def _rows(matrix: AssignmentMatrix) -> list[list[str]]:
    return [[format_rational(v) for v in row] for row in matrix.entries]


def _restrict(ranking: Sequence[ObjectId], objects: frozenset[ObjectId]) -> tuple[ObjectId, ...]:
    return tuple(x for x in ranking if x in objects)


def _modify(rankings: Rankings, cycle: Cycle) -> dict[AgentId, tuple[ObjectId, ...]]:
    """Cycle members keep their top and move their endowment to second place."""
    out = dict(rankings)
    for i in cycle:
        r = rankings[i]
        rest = tuple(x for x in r[1:] if x != i)
        out[i] = (r[0], i) + rest
    return out


def modified_profile(profile: Profile, cycle: Sequence[AgentId]) -> Profile:
    """Push each cycle member's endowment to second place, keeping the top.

    ``cycle`` must be a non-singleton cycle of the trading graph of
    ``profile``; the trading graph is unchanged by the modification.
    """
    cycle = tuple(cycle)
    graph = build_graph(profile, range(1, profile.n + 1))
    members = set(cycle)
    if len(cycle) < 2 or len(members) != len(cycle):
        raise ValueError(f"{cycle} is not a non-singleton cycle")
    for a, b in zip(cycle, cycle[1:] + cycle[:1]):
        if graph.successor[a] != b:
            raise ValueError(f"{cycle} is not a cycle of the trading graph")
    new = _modify({i: p.ranking for i, p in enumerate(profile, start=1)}, cycle)
    result = Profile(tuple(Preference(new[i]) for i in range(1, profile.n + 1)))
    if build_graph(result, range(1, profile.n + 1)).successor != graph.successor:
        raise AssertionError("modification changed the trading graph")
    return result


class SubRule:
    """The rule seen on the sub-instance of ``active`` agents."""

    def __init__(self, rule: Rule, base: Profile, active: frozenset[AgentId]):
        self.rule = rule
        self.base = base
        self.active = frozenset(active)
        self.objects = frozenset(active)
        self._cache: dict[Profile, AssignmentMatrix] = {}

    def restricted_truth(self) -> dict[AgentId, tuple[ObjectId, ...]]:
        return {i: _restrict(self.base[i].ranking, self.objects) for i in sorted(self.active)}

    def extend(self, sub: Rankings) -> Profile:
        prefs = []
        for i, p in enumerate(self.base, start=1):
            if i in sub:
                fill = iter(sub[i])
                prefs.append(Preference(tuple(next(fill) if x in self.objects else x for x in p.ranking)))
            else:
                prefs.append(p)
        return Profile(tuple(prefs))

    def evaluate(self, sub: Rankings) -> tuple[Profile, AssignmentMatrix]:
        """Full profile and full rule output; checks the projection is bi-stochastic."""
        full = self.extend(sub)
        matrix = self._cache.get(full)
        if matrix is None:
            matrix = self.rule(full)
            self._cache[full] = matrix
        for i in self.active:
            outside = sum((matrix[i, x] for x in range(1, full.n + 1) if x not in self.objects), Fraction(0))
            if outside:
                raise DerivationError(
                    INDUCTION_REDUCE,
                    "sub-rule consistency",
                    f"agent {i} gets mass {outside} outside the remaining objects at profile {full.encode()}",
                    profile=full.encode(),
                    agent=i,
                )
        return full, matrix

    def __call__(self, sub: Rankings) -> dict[AgentId, tuple[Fraction, ...]]:
        """Projected rows over the remaining objects (in increasing object order)."""
        _, matrix = self.evaluate(sub)
        objs = sorted(self.objects)
        return {i: tuple(matrix[i, x] for x in objs) for i in sorted(self.active)}


class _Engine:
    def __init__(self, profile: Profile, rule: Rule):
        self.profile = profile
        self.rule = rule
        self.steps: list[DerivationStep] = []
        # (profile code, agent) -> object known to be received with probability 1
        self.facts: dict[tuple[int, AgentId], ObjectId] = {}

    def emit(self, kind: str, **payload) -> None:
        self.steps.append(DerivationStep(kind, payload))

    def _fact(self, code: int, agent: AgentId, obj: ObjectId) -> dict:
        self.facts[(code, agent)] = obj
        return {"profile": code, "agent": agent, "object": obj}

    # -- individual steps ------------------------------------------------

    def singleton(self, sub: SubRule, level: int, agent: AgentId) -> None:
        truth = sub.restricted_truth()
        full, matrix = sub.evaluate(truth)
        code = full.encode()
        mass = matrix[agent, agent]
        if mass != ONE:
            raise DerivationError(
                SINGLETON_IR,
                "SD-individual rationality",
                f"agent {agent} tops their own endowment but receives it with probability {mass}",
                profile=code,
                agent=agent,
            )
        self.emit(
            SINGLETON_IR,
            level=level,
            active=sorted(sub.active),
            agent=agent,
            profile=code,
            ranking=list(truth[agent]),
            upper_contour=[agent],
            matrix=_rows(matrix),
            conclusions=[self._fact(code, agent, agent)],
        )

    def closure(self, sub: SubRule, level: int, cycle: Cycle, modified: Rankings) -> tuple[int, AssignmentMatrix]:
        full, matrix = sub.evaluate(modified)
        code = full.encode()
        pred = {b: a for a, b in zip(cycle, cycle[1:] + cycle[:1])}
        ir_instances = []
        for i in cycle:
            top = modified[i][0]
            mass = matrix[i, top] + matrix[i, i]
            if mass != ONE:
                raise DerivationError(
                    CYCLE_CLOSURE,
                    "SD-individual rationality",
                    f"at the modified profile agent {i} puts mass {mass} on {{top, endowment}}",
                    profile=code,
                    agent=i,
                )
            ir_instances.append({"agent": i, "upper_contour": [top, i]})
        pairs = []
        for j in cycle:
            total = matrix[pred[j], j] + matrix[j, j]
            if total != ONE:
                # unreachable when every IR instance above holds
                raise DerivationError(CYCLE_CLOSURE, "bi-stochasticity", f"column {j} pair sums to {total}", profile=code)
            pairs.append({"object": j, "holders": [pred[j], j]})
        self.emit(
            CYCLE_CLOSURE,
            level=level,
            active=sorted(sub.active),
            cycle=list(cycle),
            profile=code,
            original={str(i): list(sub.restricted_truth()[i]) for i in cycle},
            modified={str(i): list(modified[i]) for i in cycle},
            matrix=_rows(matrix),
            ir_instances=ir_instances,
            column_pairs=pairs,
        )
        return code, matrix

    def efficiency(self, sub: SubRule, level: int, cycle: Cycle, modified: Rankings, code: int, matrix: AssignmentMatrix) -> None:
        short = [i for i in cycle if matrix[i, modified[i][0]] != ONE]
        if short:
            rows = [list(r) for r in matrix.entries]
            for i in cycle:
                rows[i - 1] = [ONE if x == modified[i][0] else Fraction(0) for x in range(1, matrix.n + 1)]
            witness = AssignmentMatrix(tuple(tuple(r) for r in rows))
            raise DerivationError(
                CYCLE_EFFICIENCY,
                "SD-efficiency",
                f"agents {short} do not get their top object at the modified profile; "
                "giving every cycle member their top dominates",
                profile=code,
                agents=short,
                witness=witness,
            )
        self.emit(
            CYCLE_EFFICIENCY,
            level=level,
            active=sorted(sub.active),
            cycle=list(cycle),
            profile=code,
            tops=[{"agent": i, "object": modified[i][0]} for i in cycle],
            matrix=_rows(matrix),
            conclusions=[self._fact(code, i, modified[i][0]) for i in cycle],
        )

    def top_sp_chain(self, sub: SubRule, level: int, cycle: Cycle, modified: Rankings, base_code: int) -> None:
        truth = sub.restricted_truth()
        z = len(cycle)
        codes: dict[frozenset[AgentId], int] = {frozenset(): base_code}
        succ = dict(zip(cycle, cycle[1:] + cycle[:1]))
        pred = {b: a for a, b in succ.items()}
        for k in range(1, z + 1):
            for positions in itertools.combinations(range(z), k):
                restored = [cycle[p] for p in positions]
                rset = frozenset(restored)
                current = dict(modified)
                for r in restored:
                    current[r] = truth[r]
                full, matrix = sub.evaluate(current)
                code = full.encode()
                codes[rset] = code
                instances = []
                for r in restored:
                    top = truth[r][0]
                    before = codes[rset - {r}]
                    if self.facts.get((before, r)) != top:
                        raise AssertionError("premise not established")  # ordering bug
                    if matrix[r, top] != ONE:
                        raise DerivationError(
                            TOP_SP_TRANSFER,
                            "SD-top-strategy-proofness",
                            f"k={k}: agent {r} gets their top with probability {matrix[r, top]} but would get it "
                            f"with probability 1 by reporting the modified preference",
                            profile=code,
                            agent=r,
                            k=k,
                            misreport_profile=before,
                        )
                    instances.append({"agent": r, "object": top, "misreport_profile": before})
                conclusions = [self._fact(code, r, truth[r][0]) for r in restored]
                propagation = []
                # walk forward from a restored member so every unrestored predecessor is settled first
                start = restored[0]
                u = succ[start]
                while u != start:
                    if u not in rset:
                        top = modified[u][0]
                        if matrix[u, top] != ONE:
                            raise DerivationError(
                                TOP_SP_TRANSFER,
                                "SD-individual rationality",
                                f"k={k}: agent {u}'s endowment is taken by agent {pred[u]} yet agent {u} "
                                f"does not get their top",
                                profile=code,
                                agent=u,
                                k=k,
                            )
                        propagation.append({"agent": u, "taken_by": pred[u], "object": u, "upper_contour": [top, u]})
                        conclusions.append(self._fact(code, u, top))
                    u = succ[u]
                self.emit(
                    TOP_SP_TRANSFER,
                    level=level,
                    active=sorted(sub.active),
                    cycle=list(cycle),
                    k=k,
                    agent=restored[-1],
                    restored=restored,
                    profile=code,
                    rankings={str(i): list(current[i]) for i in cycle},
                    matrix=_rows(matrix),
                    instances=instances,
                    propagation=propagation,
                    conclusions=conclusions,
                )

    # -- driver ------------------------------------------------------------

    def run(self) -> dict[AgentId, ObjectId]:
        n = self.profile.n
        active = frozenset(range(1, n + 1))
        level = 0
        got: dict[AgentId, ObjectId] = {}
        while active:
            sub = SubRule(self.rule, self.profile, active)
            truth = sub.restricted_truth()
            graph = build_graph([truth.get(i, ()) for i in range(1, n + 1)], active)
            cycles = find_cycles(graph)
            for cycle in cycles:
                if len(cycle) == 1:
                    self.singleton(sub, level, cycle[0])
            for cycle in cycles:
                if len(cycle) == 1:
                    continue
                modified = _modify(truth, cycle)
                code, matrix = self.closure(sub, level, cycle, modified)
                self.efficiency(sub, level, cycle, modified, code, matrix)
                self.top_sp_chain(sub, level, cycle, modified, code)
            truth_code = self.profile.encode()
            leaving = sorted(i for c in cycles for i in c)
            for i in leaving:
                got[i] = self.facts[(truth_code, i)]
            remaining = sorted(active - set(leaving))
            if remaining:
                self.emit(
                    INDUCTION_REDUCE,
                    level=level,
                    active=sorted(active),
                    removed=[{"agent": i, "object": got[i]} for i in leaving],
                    remaining=remaining,
                    note=INDUCTION_NOTE,
                )
            active = frozenset(remaining)
            level += 1
        return got


def derive_profile(profile: Profile, rule: Rule, rule_name: str | None = None) -> Certificate:
    """Certificate that ``rule(profile)`` is the TTC assignment, or :class:`DerivationError`."""
    engine = _Engine(profile, rule)
    got = engine.run()
    conclusion = AssignmentMatrix.from_permutation([got[i] for i in range(1, profile.n + 1)])
    if rule(profile) != conclusion:
        raise AssertionError("derived assignment differs from the rule's output")
    if tuple(got[i] for i in range(1, profile.n + 1)) != ttc_assignment(profile):
        raise AssertionError("derived assignment differs from TTC")
    branch = None
    if profile.n == 2:
        branch = "distinct-tops" if profile[1].top != profile[2].top else "shared-top"
    name = rule_name or getattr(rule, "name", None) or getattr(rule, "__name__", "rule")
    return Certificate(profile, tuple(engine.steps), conclusion, name, branch)


def derive_cycle_closure(profile: Profile, cycle: Sequence[AgentId], rule: Rule) -> DerivationStep:
    """Closure of ``cycle`` at the modified profile (top-level instance only)."""
    engine = _Engine(profile, rule)
    sub = SubRule(rule, profile, frozenset(range(1, profile.n + 1)))
    cycle = tuple(cycle)
    modified_profile(profile, cycle)
    modified = _modify(sub.restricted_truth(), cycle)
    engine.closure(sub, 0, cycle, modified)
    return engine.steps[-1]


def derive_cycle_efficiency(profile: Profile, cycle: Sequence[AgentId], rule: Rule) -> DerivationStep:
    engine = _Engine(profile, rule)
    sub = SubRule(rule, profile, frozenset(range(1, profile.n + 1)))
    cycle = tuple(cycle)
    modified_profile(profile, cycle)
    modified = _modify(sub.restricted_truth(), cycle)
    code, matrix = engine.closure(sub, 0, cycle, modified)
    engine.efficiency(sub, 0, cycle, modified, code, matrix)
    return engine.steps[-1]


def derive_top_sp_chain(profile: Profile, cycle: Sequence[AgentId], rule: Rule) -> list[DerivationStep]:
    """TopSpTransfer steps for ``cycle``; empty for a singleton cycle."""
    cycle = tuple(cycle)
    if len(cycle) == 1:
        return []
    engine = _Engine(profile, rule)
    sub = SubRule(rule, profile, frozenset(range(1, profile.n + 1)))
    modified_profile(profile, cycle)
    modified = _modify(sub.restricted_truth(), cycle)
    code, matrix = engine.closure(sub, 0, cycle, modified)
    engine.efficiency(sub, 0, cycle, modified, code, matrix)
    mark = len(engine.steps)
    engine.top_sp_chain(sub, 0, cycle, modified, code)
    return engine.steps[mark:]
