"""First-order stochastic dominance of lotteries under a strict preference."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import ONE, ObjectId, Preference


class Relation(enum.Enum):
    STRICTLY_PREFERRED = "StrictlyPreferred"
    EQUIVALENT = "Equivalent"
    WEAKLY_PREFERRED_NOT_STRICT = "WeaklyPreferredNotStrict"
    INCOMPARABLE = "Incomparable"
    # lhs is dominated by rhs; kept distinct so callers see the direction
    STRICTLY_DISPREFERRED = "StrictlyDispreferred"


@dataclass(frozen=True)
class DominanceVerdict:
    relation: Relation
    witness: ObjectId | None = None

    @property
    def weakly_prefers(self) -> bool:
        return self.relation in (
            Relation.STRICTLY_PREFERRED,
            Relation.EQUIVALENT,
            Relation.WEAKLY_PREFERRED_NOT_STRICT,
        )


def _check_lottery(lottery: Sequence[Fraction], n: int, name: str) -> None:
    if len(lottery) != n:
        raise ValueError(f"{name} has {len(lottery)} entries, expected {n}")
    if any(v < 0 for v in lottery):
        raise ValueError(f"{name} has a negative entry")
    total = sum(lottery, Fraction(0))
    if total != ONE:
        raise ValueError(f"{name} sums to {total}, not 1")


def cumulative(pref: Preference, lottery: Sequence[Fraction]) -> list[Fraction]:
    """Probability of each upper contour set, in preference order.

    Entry ``k-1`` is the mass on the ``k`` best objects.
    """
    acc = Fraction(0)
    out = []
    for x in pref.ranking:
        acc += lottery[x - 1]
        out.append(acc)
    return out


def sd_compare(pref: Preference, lhs: Sequence[Fraction], rhs: Sequence[Fraction]) -> DominanceVerdict:
    """Compare ``lhs`` against ``rhs`` from the point of view of ``pref``.

    The witness is the first object (best first) whose upper contour set
    receives strictly more mass from ``lhs`` for a strict verdict, or strictly
    less mass from ``lhs`` for an incomparable or dispreferred verdict.
    """
    _check_lottery(lhs, pref.n, "lhs")
    _check_lottery(rhs, pref.n, "rhs")
    above = below = None
    for x, a, b in zip(pref.ranking, cumulative(pref, lhs), cumulative(pref, rhs)):
        if a > b and above is None:
            above = x
        elif a < b and below is None:
            below = x
    if above is None and below is None:
        return DominanceVerdict(Relation.EQUIVALENT)
    if below is None:
        return DominanceVerdict(Relation.STRICTLY_PREFERRED, above)
    if above is None:
        return DominanceVerdict(Relation.STRICTLY_DISPREFERRED, below)
    return DominanceVerdict(Relation.INCOMPARABLE, below)


def weakly_prefers(pref: Preference, lhs: Sequence[Fraction], rhs: Sequence[Fraction]) -> bool:
    return sd_compare(pref, lhs, rhs).weakly_prefers


def sd_dominates_degenerate(pref: Preference, lottery: Sequence[Fraction], target: ObjectId) -> bool:
    """True iff ``lottery`` weakly dominates the sure outcome ``target``.

    Equivalent to the lottery putting all of its mass on the upper contour
    set of ``target``.
    """
    _check_lottery(lottery, pref.n, "lottery")
    return sum((lottery[x - 1] for x in pref.upper_contour(target)), Fraction(0)) == ONE
