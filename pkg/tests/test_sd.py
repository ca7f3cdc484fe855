from fractions import Fraction as F

import pytest

from ttcsd.core import Preference, all_preferences, degenerate
from ttcsd.sd import Relation, cumulative, sd_compare, sd_dominates_degenerate, weakly_prefers

from conftest import oracle_strictly_dominates, oracle_weakly_dominates

P123 = Preference((1, 2, 3))


def test_strict_example():
    v = sd_compare(P123, (F(1, 2), F(1, 2), 0), (F(1, 2), 0, F(1, 2)))
    assert v.relation is Relation.STRICTLY_PREFERRED
    assert v.witness == 2
    assert cumulative(P123, (F(1, 2), F(1, 2), 0)) == [F(1, 2), 1, 1]


def test_equivalent_example():
    lot = (F(1, 6), F(1, 3), F(1, 2))
    for p in all_preferences(3):
        v = sd_compare(p, lot, lot)
        assert v.relation is Relation.EQUIVALENT and v.witness is None


def test_incomparable_example():
    lhs, rhs = (F(1, 2), 0, F(1, 2)), (0, 1, 0)
    # cumulative sums (1/2, 1/2, 1) against (0, 1, 1) cross
    assert cumulative(P123, lhs) == [F(1, 2), F(1, 2), 1]
    assert cumulative(P123, rhs) == [0, 1, 1]
    v = sd_compare(P123, lhs, rhs)
    assert v.relation is Relation.INCOMPARABLE
    assert v.witness == 2
    assert not oracle_weakly_dominates(P123.ranking, lhs, rhs)
    assert not oracle_weakly_dominates(P123.ranking, rhs, lhs)


def test_dispreferred_direction():
    v = sd_compare(P123, (0, 0, 1), (1, 0, 0))
    assert v.relation is Relation.STRICTLY_DISPREFERRED and v.witness == 1
    assert not v.weakly_prefers


def test_degenerate_examples():
    assert sd_dominates_degenerate(Preference((2, 1, 3)), (F(1, 3), F(2, 3), 0), 1)
    for x in (1, 2, 3):
        assert sd_dominates_degenerate(P123, degenerate(3, x), x)
    assert not sd_dominates_degenerate(P123, (0, 0, 1), 2)


@pytest.mark.parametrize("bad", [(F(1, 2), F(1, 2)), (F(1, 2), F(1, 3), 0), (F(3, 2), F(-1, 2), 0)])
def test_rejects_non_lotteries(bad):
    with pytest.raises(ValueError):
        sd_compare(P123, bad, (1, 0, 0))
    with pytest.raises(ValueError):
        sd_dominates_degenerate(P123, bad, 1)


def _grid(n, denom):
    """All lotteries over ``n`` objects with probabilities in multiples of 1/denom."""
    def rec(k, left):
        if k == 1:
            yield (F(left, denom),)
            return
        for v in range(left + 1):
            for rest in rec(k - 1, left - v):
                yield (F(v, denom),) + rest

    return list(rec(n, denom))


def test_agrees_with_definitional_quantifier():
    lots = _grid(3, 3)
    for p in all_preferences(3):
        for a in lots:
            for b in lots:
                v = sd_compare(p, a, b)
                assert v.weakly_prefers == oracle_weakly_dominates(p.ranking, a, b)
                assert (v.relation is Relation.STRICTLY_PREFERRED) == oracle_strictly_dominates(p.ranking, a, b)
                assert (v.relation is Relation.EQUIVALENT) == (a == b)
                assert weakly_prefers(p, a, b) == v.weakly_prefers


def test_degenerate_simplification_matches_compare():
    for p in all_preferences(3):
        for lot in _grid(3, 4):
            for t in (1, 2, 3):
                rel = sd_compare(p, lot, degenerate(3, t)).relation
                assert sd_dominates_degenerate(p, lot, t) == (rel in (Relation.STRICTLY_PREFERRED, Relation.EQUIVALENT))
