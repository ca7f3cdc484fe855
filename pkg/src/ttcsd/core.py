"""Domain types for the object-reallocation problem.

Agents and objects are 1-based integers. Agent ``i`` is endowed with object
``i`` unless an explicit :class:`Endowment` says otherwise; every rule in this
package works on the canonical (identity) endowment and non-identity
endowments are relabeled before use.

All probabilities are :class:`fractions.Fraction` values.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

AgentId = int
ObjectId = int
Lottery = tuple  # tuple[Fraction, ...], entry j-1 is the probability of object j

ZERO = Fraction(0)
ONE = Fraction(1)

MIN_AGENTS = 2

_RATIONAL = re.compile(r"-?[0-9]+(/[0-9]+)?")


def _check_index(value: int, n: int, what: str) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= n:
        raise ValueError(f"{what} {value!r} is not in 1..{n}")


@dataclass(frozen=True)
class Preference:
    """A strict ranking of objects, best first."""

    ranking: tuple[ObjectId, ...]
    _position: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ranking = tuple(self.ranking)
        n = len(ranking)
        if not n or sorted(ranking) != list(range(1, n + 1)):
            raise ValueError(f"ranking {ranking} is not a permutation of 1..{n}")
        position = [0] * n
        for k, x in enumerate(ranking):
            position[x - 1] = k + 1
        object.__setattr__(self, "ranking", ranking)
        object.__setattr__(self, "_position", tuple(position))

    @property
    def n(self) -> int:
        return len(self.ranking)

    @property
    def top(self) -> ObjectId:
        return self.ranking[0]

    def at(self, k: int) -> ObjectId:
        """The k-th ranked object (1-based)."""
        _check_index(k, self.n, "rank")
        return self.ranking[k - 1]

    def rank(self, x: ObjectId) -> int:
        _check_index(x, self.n, "object")
        return self._position[x - 1]

    def prefers(self, x: ObjectId, y: ObjectId) -> bool:
        """True iff ``x`` is strictly above ``y``."""
        return self.rank(x) < self.rank(y)

    def upper_contour(self, x: ObjectId) -> frozenset[ObjectId]:
        return frozenset(self.ranking[: self.rank(x)])

    def restricted(self, objects: Iterable[ObjectId]) -> tuple[ObjectId, ...]:
        """The ranking restricted to ``objects``, as a plain tuple."""
        keep = set(objects)
        return tuple(x for x in self.ranking if x in keep)

    def index(self) -> int:
        """Lexicographic index of the ranking among all n! rankings."""
        return permutation_index(self.ranking)

    @classmethod
    def from_index(cls, n: int, index: int) -> Preference:
        return cls(permutation_at(n, index))

    def __str__(self) -> str:
        return ">".join(f"x{x}" for x in self.ranking)


def permutation_index(ranking: Sequence[int]) -> int:
    """Lexicographic rank of a permutation of 1..n (Lehmer code)."""
    n = len(ranking)
    remaining = list(range(1, n + 1))
    index = 0
    for k, x in enumerate(ranking):
        pos = remaining.index(x)
        index += pos * math.factorial(n - 1 - k)
        remaining.pop(pos)
    return index


def permutation_at(n: int, index: int) -> tuple[int, ...]:
    if not 0 <= index < math.factorial(n):
        raise ValueError(f"permutation index {index} out of range for n={n}")
    remaining = list(range(1, n + 1))
    out = []
    for k in range(n - 1, -1, -1):
        pos, index = divmod(index, math.factorial(k))
        out.append(remaining.pop(pos))
    return tuple(out)


def all_preferences(n: int) -> list[Preference]:
    return [Preference(p) for p in itertools.permutations(range(1, n + 1))]


@dataclass(frozen=True)
class Profile:
    """One preference per agent; ``prefs[i-1]`` belongs to agent ``i``."""

    prefs: tuple[Preference, ...]

    def __post_init__(self) -> None:
        prefs = tuple(p if isinstance(p, Preference) else Preference(tuple(p)) for p in self.prefs)
        n = len(prefs)
        if n < MIN_AGENTS:
            raise ValueError(f"need at least {MIN_AGENTS} agents, got {n}")
        for i, p in enumerate(prefs, start=1):
            if p.n != n:
                raise ValueError(f"agent {i} ranks {p.n} objects, expected {n}")
        object.__setattr__(self, "prefs", prefs)

    @classmethod
    def of(cls, *rankings: Sequence[int]) -> Profile:
        return cls(tuple(Preference(tuple(r)) for r in rankings))

    @property
    def n(self) -> int:
        return len(self.prefs)

    def __getitem__(self, agent: AgentId) -> Preference:
        _check_index(agent, self.n, "agent")
        return self.prefs[agent - 1]

    def __iter__(self) -> Iterator[Preference]:
        return iter(self.prefs)

    def __len__(self) -> int:
        return self.n

    def replace(self, agent: AgentId, pref: Preference) -> Profile:
        _check_index(agent, self.n, "agent")
        prefs = list(self.prefs)
        prefs[agent - 1] = pref
        return Profile(tuple(prefs))

    def rankings(self) -> tuple[tuple[ObjectId, ...], ...]:
        return tuple(p.ranking for p in self.prefs)

    def encode(self) -> int:
        """Index of the profile in lexicographic order; agent 1 is the most significant digit."""
        base = math.factorial(self.n)
        code = 0
        for p in self.prefs:
            code = code * base + p.index()
        return code

    @classmethod
    def decode(cls, n: int, code: int) -> Profile:
        base = math.factorial(n)
        if not 0 <= code < base**n:
            raise ValueError(f"profile code {code} out of range for n={n}")
        digits = []
        for _ in range(n):
            code, d = divmod(code, base)
            digits.append(d)
        return cls(tuple(Preference.from_index(n, d) for d in reversed(digits)))

    def __str__(self) -> str:
        return "; ".join(f"P{i}: {p}" for i, p in enumerate(self.prefs, start=1))


@dataclass(frozen=True)
class AssignmentMatrix:
    """A bi-stochastic matrix; rows are agents, columns are objects."""

    entries: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(Fraction(v) for v in row) for row in self.entries)
        n = len(rows)
        if n < MIN_AGENTS:
            raise ValueError(f"need at least {MIN_AGENTS} agents, got {n}")
        for i, row in enumerate(rows, start=1):
            if len(row) != n:
                raise ValueError(f"row {i} has {len(row)} entries, expected {n}")
            for j, v in enumerate(row, start=1):
                if not ZERO <= v <= ONE:
                    raise ValueError(f"entry ({i},{j}) = {v} is outside [0,1]")
            if sum(row) != ONE:
                raise ValueError(f"row {i} sums to {sum(row)}, not 1")
        for j in range(n):
            total = sum(row[j] for row in rows)
            if total != ONE:
                raise ValueError(f"column {j + 1} sums to {total}, not 1")
        object.__setattr__(self, "entries", rows)

    @property
    def n(self) -> int:
        return len(self.entries)

    def __getitem__(self, key: tuple[AgentId, ObjectId]) -> Fraction:
        i, j = key
        _check_index(i, self.n, "agent")
        _check_index(j, self.n, "object")
        return self.entries[i - 1][j - 1]

    def row(self, agent: AgentId) -> Lottery:
        _check_index(agent, self.n, "agent")
        return self.entries[agent - 1]

    def column(self, obj: ObjectId) -> tuple[Fraction, ...]:
        _check_index(obj, self.n, "object")
        return tuple(row[obj - 1] for row in self.entries)

    def is_deterministic(self) -> bool:
        return all(v in (ZERO, ONE) for row in self.entries for v in row)

    def to_permutation(self) -> tuple[ObjectId, ...]:
        """Object held by each agent; only for deterministic matrices."""
        if not self.is_deterministic():
            raise ValueError("matrix is not deterministic")
        return tuple(row.index(ONE) + 1 for row in self.entries)

    @classmethod
    def from_permutation(cls, assignment: Sequence[ObjectId]) -> AssignmentMatrix:
        n = len(assignment)
        return cls(tuple(tuple(ONE if j == x else ZERO for j in range(1, n + 1)) for x in assignment))

    @classmethod
    def identity(cls, n: int) -> AssignmentMatrix:
        return cls.from_permutation(range(1, n + 1))

    @classmethod
    def uniform(cls, n: int) -> AssignmentMatrix:
        return cls(tuple(tuple(Fraction(1, n) for _ in range(n)) for _ in range(n)))

    def __str__(self) -> str:
        return "\n".join(" ".join(format_rational(v) for v in row) for row in self.entries)


def row_lottery(matrix: AssignmentMatrix, agent: AgentId) -> Lottery:
    return matrix.row(agent)


def upper_contour(pref: Preference, x: ObjectId) -> frozenset[ObjectId]:
    return pref.upper_contour(x)


def rank(pref: Preference, x: ObjectId) -> int:
    return pref.rank(x)


def degenerate(n: int, x: ObjectId) -> Lottery:
    _check_index(x, n, "object")
    return tuple(ONE if j == x else ZERO for j in range(1, n + 1))


@dataclass(frozen=True)
class Endowment:
    """Which agent initially owns each object. ``owner[j-1]`` owns object ``j``."""

    owner: tuple[AgentId, ...]

    def __post_init__(self) -> None:
        owner = tuple(self.owner)
        n = len(owner)
        if sorted(owner) != list(range(1, n + 1)):
            raise ValueError(f"endowment {owner} is not a bijection onto agents 1..{n}")
        object.__setattr__(self, "owner", owner)

    @classmethod
    def canonical(cls, n: int) -> Endowment:
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def from_holdings(cls, holdings: Sequence[ObjectId]) -> Endowment:
        """Build from ``holdings[i-1]`` = object owned by agent ``i``."""
        n = len(holdings)
        owner = [0] * n
        for agent, x in enumerate(holdings, start=1):
            _check_index(x, n, "object")
            owner[x - 1] = agent
        return cls(tuple(owner))

    @property
    def n(self) -> int:
        return len(self.owner)

    def is_canonical(self) -> bool:
        return self.owner == tuple(range(1, self.n + 1))

    def owner_of(self, x: ObjectId) -> AgentId:
        return self.owner[x - 1]

    def holding_of(self, agent: AgentId) -> ObjectId:
        return self.owner.index(agent) + 1

    def to_canonical(self, x: ObjectId) -> ObjectId:
        """Object label after relabeling so that each agent owns their own index."""
        return self.owner_of(x)

    def from_canonical(self, x: ObjectId) -> ObjectId:
        return self.holding_of(x)

    def canonicalize(self, profile: Profile) -> Profile:
        return Profile(tuple(Preference(tuple(self.to_canonical(x) for x in p.ranking)) for p in profile))

    def decanonicalize(self, matrix: AssignmentMatrix) -> AssignmentMatrix:
        """Map a matrix over canonical labels back to the original object labels."""
        n = matrix.n
        rows = []
        for i in range(1, n + 1):
            rows.append(tuple(matrix[i, self.to_canonical(j)] for j in range(1, n + 1)))
        return AssignmentMatrix(tuple(rows))


def parse_rational(text: str | int) -> Fraction:
    """Parse ``"p/q"`` or an integer; floats are refused."""
    if isinstance(text, bool) or isinstance(text, float):
        raise ValueError(f"{text!r} is not an exact rational")
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise ValueError(f"{text!r} is not a rational string")
    if not _RATIONAL.fullmatch(text.strip()):
        raise ValueError(f"{text!r} is not of the form p or p/q")
    try:
        return Fraction(text.strip())
    except ZeroDivisionError as exc:
        raise ValueError(f"{text!r} has a zero denominator") from exc


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"
