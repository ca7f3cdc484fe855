"""Shared fixtures and brute-force oracles.

The oracles here are written from the definitions, not from the package:
they only borrow the value types so results can be compared directly.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import pytest

from ttcsd.core import AssignmentMatrix, Profile

# agent 1: x2 > x3 > x1, agent 2: x1 > x3 > x2, agent 3: x1 > x2 > x3
EX3 = Profile.of((2, 3, 1), (1, 3, 2), (1, 2, 3))
EX3_TTC = (2, 1, 3)

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def ex3() -> Profile:
    return EX3


# -- oracles -----------------------------------------------------------------


def oracle_upper_mass(ranking, lottery, x) -> Fraction:
    """Mass of the lottery on objects weakly above ``x``."""
    cut = ranking.index(x)
    return sum((Fraction(lottery[y - 1]) for y in ranking[: cut + 1]), Fraction(0))


def oracle_weakly_dominates(ranking, lhs, rhs) -> bool:
    return all(oracle_upper_mass(ranking, lhs, x) >= oracle_upper_mass(ranking, rhs, x) for x in ranking)


def oracle_strictly_dominates(ranking, lhs, rhs) -> bool:
    return oracle_weakly_dominates(ranking, lhs, rhs) and any(
        oracle_upper_mass(ranking, lhs, x) > oracle_upper_mass(ranking, rhs, x) for x in ranking
    )


def oracle_core(rankings) -> tuple[int, ...]:
    """The unique core allocation of the housing market, by exhaustion.

    A permutation is in the core when no coalition can reallocate its own
    endowments so that every member is weakly better off and one strictly.
    """
    n = len(rankings)
    pos = [{x: k for k, x in enumerate(r)} for r in rankings]
    found = []
    for alloc in itertools.permutations(range(1, n + 1)):
        blocked = False
        for size in range(1, n + 1):
            for coalition in itertools.combinations(range(1, n + 1), size):
                for re in itertools.permutations(coalition):
                    gains = [pos[i - 1][x] - pos[i - 1][alloc[i - 1]] for i, x in zip(coalition, re)]
                    if all(g <= 0 for g in gains) and any(g < 0 for g in gains):
                        blocked = True
                        break
                if blocked:
                    break
            if blocked:
                break
        if not blocked:
            found.append(alloc)
    assert len(found) == 1, found
    return found[0]


def oracle_pe_ir(rankings) -> set[tuple[int, ...]]:
    """Permutations that are individually rational and not dominated by another permutation."""
    n = len(rankings)
    pos = [{x: k for k, x in enumerate(r)} for r in rankings]
    perms = list(itertools.permutations(range(1, n + 1)))

    def dominates(a, b):
        d = [pos[i][b[i]] - pos[i][a[i]] for i in range(n)]
        return all(v >= 0 for v in d) and any(v > 0 for v in d)

    ir = [p for p in perms if all(pos[i][p[i]] <= pos[i][i + 1] for i in range(n))]
    return {p for p in ir if not any(dominates(q, p) for q in perms)}


def perm_matrix(perm) -> AssignmentMatrix:
    return AssignmentMatrix.from_permutation(perm)
