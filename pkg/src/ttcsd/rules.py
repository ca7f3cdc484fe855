"""Assignment rules: callables from profiles to assignment matrices.

Any ``Callable[[Profile], AssignmentMatrix]`` is accepted where a rule is
expected. :class:`TableRule` is the explicit table form; callables are
tabulated before exhaustive checks so they are evaluated once per profile.
"""

from __future__ import annotations

import math
from typing import Callable, Mapping

import numpy as np

from . import kernels
from .core import AssignmentMatrix, Profile
from .ttc import ttc

Rule = Callable[[Profile], AssignmentMatrix]


class TableRule:
    """A rule given by its value at every profile code for a fixed ``n``."""

    def __init__(self, n: int, table: Mapping[int, AssignmentMatrix], name: str = "table"):
        size = math.factorial(n) ** n
        missing = [c for c in range(size) if c not in table]
        if missing:
            raise ValueError(f"table rule is missing {len(missing)} profiles (first code {missing[0]})")
        extra = [c for c in table if not 0 <= c < size]
        if extra:
            raise ValueError(f"table rule has out-of-range profile code {extra[0]}")
        for code, m in table.items():
            if m.n != n:
                raise ValueError(f"matrix for profile code {code} has size {m.n}, expected {n}")
        self.n = n
        self.name = name
        self._table = [table[c] for c in range(size)]

    def __call__(self, profile: Profile) -> AssignmentMatrix:
        return self._table[profile.encode()]

    def at(self, code: int) -> AssignmentMatrix:
        return self._table[code]

    def items(self):
        return enumerate(self._table)

    def is_deterministic(self) -> bool:
        return all(m.is_deterministic() for m in self._table)

    def permutation_table(self) -> np.ndarray:
        """0-based object per agent at every profile; deterministic tables only."""
        return np.array([[x - 1 for x in m.to_permutation()] for m in self._table], dtype=np.int8)

    def with_override(self, overrides: Mapping[int, AssignmentMatrix], name: str | None = None) -> TableRule:
        table = dict(enumerate(self._table))
        table.update(overrides)
        return TableRule(self.n, table, name or self.name)

    def __repr__(self) -> str:
        return f"TableRule(n={self.n}, name={self.name!r})"


class PermutationTableRule(TableRule):
    """Deterministic table rule stored as a compact permutation array."""

    def __init__(self, n: int, perms: np.ndarray, name: str = "table"):
        self.n = n
        self.name = name
        self._perms = perms
        if perms.shape != (math.factorial(n) ** n, n):
            raise ValueError(f"permutation table has shape {perms.shape}")

    def __call__(self, profile: Profile) -> AssignmentMatrix:
        return self.at(profile.encode())

    def at(self, code: int) -> AssignmentMatrix:
        return AssignmentMatrix.from_permutation([int(x) + 1 for x in self._perms[code]])

    def items(self):
        return ((c, self.at(c)) for c in range(len(self._perms)))

    def is_deterministic(self) -> bool:
        return True

    def permutation_table(self) -> np.ndarray:
        return self._perms

    def with_override(self, overrides, name=None):
        if all(m.is_deterministic() for m in overrides.values()):
            perms = self._perms.copy()
            for code, m in overrides.items():
                if m.n != self.n or not 0 <= code < len(perms):
                    raise ValueError(f"bad override for profile code {code}")
                perms[code] = [x - 1 for x in m.to_permutation()]
            return PermutationTableRule(self.n, perms, name or self.name)
        table = dict(self.items())
        table.update(overrides)
        return TableRule(self.n, table, name or self.name)


def tabulate(rule: Rule, n: int) -> TableRule:
    """Table form of ``rule`` over every profile of size ``n``."""
    if isinstance(rule, TableRule):
        if rule.n != n:
            raise ValueError(f"table rule is for n={rule.n}, not {n}")
        return rule
    if rule is ttc_rule:
        return ttc_table_rule(n)
    size = math.factorial(n) ** n
    name = getattr(rule, "__name__", "rule").removesuffix("_rule").replace("_", "-")
    return TableRule(n, {c: rule(Profile.decode(n, c)) for c in range(size)}, name)


def ttc_table_rule(n: int) -> PermutationTableRule:
    return PermutationTableRule(n, kernels.ttc_table(n), "ttc")


def ttc_rule(profile: Profile) -> AssignmentMatrix:
    return ttc(profile)


def identity_rule(profile: Profile) -> AssignmentMatrix:
    """Everyone keeps their endowment."""
    return AssignmentMatrix.identity(profile.n)


def serial_dictatorship_rule(profile: Profile) -> AssignmentMatrix:
    """Agents pick their favourite remaining object in order 1..n, ignoring endowments."""
    taken: set[int] = set()
    got = []
    for p in profile:
        x = next(x for x in p.ranking if x not in taken)
        taken.add(x)
        got.append(x)
    return AssignmentMatrix.from_permutation(got)


def uniform_rule(profile: Profile) -> AssignmentMatrix:
    return AssignmentMatrix.uniform(profile.n)
