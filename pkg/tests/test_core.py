import math
from fractions import Fraction

import pytest

from ttcsd.core import (
    AssignmentMatrix,
    Endowment,
    Preference,
    Profile,
    all_preferences,
    degenerate,
    format_rational,
    parse_rational,
    permutation_at,
    permutation_index,
    rank,
    row_lottery,
    upper_contour,
)


class TestPreference:
    def test_upper_contour_examples(self):
        assert upper_contour(Preference((2, 3, 1)), 3) == {2, 3}
        assert upper_contour(Preference((1, 2, 3)), 3) == {1, 2, 3}
        for p in all_preferences(3):
            assert upper_contour(p, p.top) == {p.top}

    def test_rank_examples(self):
        p = Preference((2, 3, 1))
        assert rank(p, 2) == 1
        assert rank(p, 1) == 3
        assert rank(Preference((1, 2, 3)), 2) == 2

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_contour_cardinality_and_completeness(self, n):
        for p in all_preferences(n):
            for k in range(1, n + 1):
                assert len(p.upper_contour(p.at(k))) == k
                assert rank(p, p.at(k)) == k
            for x in range(1, n + 1):
                for y in range(1, n + 1):
                    if x != y:
                        assert (x in p.upper_contour(y) - {y}) != (y in p.upper_contour(x) - {x})

    @pytest.mark.parametrize("bad", [(1, 1, 2), (1, 2, 4), (0, 1), ()])
    def test_rejects_non_permutations(self, bad):
        with pytest.raises(ValueError):
            Preference(bad)

    def test_restricted(self):
        assert Preference((3, 1, 4, 2)).restricted({1, 2}) == (1, 2)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_index_round_trip(self, n):
        prefs = all_preferences(n)
        assert len(prefs) == math.factorial(n)
        assert [p.ranking for p in prefs] == sorted(p.ranking for p in prefs)
        for k, p in enumerate(prefs):
            assert p.index() == k == permutation_index(p.ranking)
            assert Preference.from_index(n, k) == p
            assert permutation_at(n, k) == p.ranking


class TestProfile:
    def test_needs_two_agents(self):
        with pytest.raises(ValueError):
            Profile.of((1,))

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            Profile.of((1, 2), (1, 2, 3))

    def test_agents_are_one_based(self, ex3):
        assert ex3[1].ranking == (2, 3, 1)
        with pytest.raises(ValueError):
            ex3[0]

    @pytest.mark.parametrize("n", [2, 3])
    def test_code_round_trip_is_lexicographic(self, n):
        size = math.factorial(n) ** n
        profiles = [Profile.decode(n, c) for c in range(size)]
        assert [p.rankings() for p in profiles] == sorted(p.rankings() for p in profiles)
        assert all(p.encode() == c for c, p in enumerate(profiles))
        with pytest.raises(ValueError):
            Profile.decode(n, size)

    def test_replace(self, ex3):
        q = ex3.replace(3, Preference((3, 2, 1)))
        assert q[3].ranking == (3, 2, 1) and q[1] == ex3[1]


class TestAssignmentMatrix:
    def test_row_lottery(self):
        assert row_lottery(AssignmentMatrix.identity(3), 2) == degenerate(3, 2)
        half = Fraction(1, 2)
        m = AssignmentMatrix(((half, half, 0), (half, half, 0), (0, 0, 1)))
        assert row_lottery(m, 1) == (half, half, 0)
        assert all(row_lottery(AssignmentMatrix.uniform(3), i) == (Fraction(1, 3),) * 3 for i in (1, 2, 3))
        assert sum(row_lottery(m, 2)) == 1

    @pytest.mark.parametrize(
        "rows",
        [
            ((1, 0), (1, 0)),  # column sums 2 and 0
            ((Fraction(1, 2), Fraction(1, 3)), (Fraction(1, 2), Fraction(2, 3))),  # row sums off
            ((2, -1), (-1, 2)),  # sums fine, entries outside [0,1]
            ((1, 0, 0), (0, 1, 0)),
            ((1,),),
        ],
    )
    def test_rejects_invalid(self, rows):
        with pytest.raises(ValueError):
            AssignmentMatrix(rows)

    def test_permutation_round_trip(self):
        m = AssignmentMatrix.from_permutation((2, 3, 1))
        assert m.is_deterministic() and m.to_permutation() == (2, 3, 1)
        assert m[1, 2] == 1 and m[1, 1] == 0
        assert m.column(1) == (0, 0, 1)
        with pytest.raises(ValueError):
            AssignmentMatrix.uniform(2).to_permutation()


class TestEndowment:
    def test_canonical(self):
        e = Endowment.canonical(3)
        assert e.is_canonical() and e.owner_of(2) == 2

    def test_relabel_round_trip(self):
        # agent 1 holds x3, agent 2 holds x1, agent 3 holds x2
        e = Endowment.from_holdings((3, 1, 2))
        assert not e.is_canonical()
        assert [e.holding_of(i) for i in (1, 2, 3)] == [3, 1, 2]
        for x in (1, 2, 3):
            assert e.from_canonical(e.to_canonical(x)) == x
        p = e.canonicalize(Profile.of((3, 1, 2), (1, 2, 3), (2, 3, 1)))
        # every agent now ranks their own endowment first
        assert [p[i].top for i in (1, 2, 3)] == [1, 2, 3]
        back = e.decanonicalize(AssignmentMatrix.identity(3))
        assert back.to_permutation() == (3, 1, 2)

    def test_rejects_non_bijection(self):
        with pytest.raises(ValueError):
            Endowment((1, 1, 2))


class TestRationals:
    @pytest.mark.parametrize("q", [Fraction(0), Fraction(1), Fraction(1, 3), Fraction(22, 7), Fraction(-5, 6)])
    def test_round_trip(self, q):
        assert parse_rational(format_rational(q)) == q

    def test_lowest_terms(self):
        assert format_rational(Fraction(2, 4)) == "1/2"
        assert parse_rational("2/4") == Fraction(1, 2)
        assert parse_rational(3) == 3

    @pytest.mark.parametrize("bad", ["0.5", "1/0", "x", "", 0.5, True, None, "1e2"])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            parse_rational(bad)
