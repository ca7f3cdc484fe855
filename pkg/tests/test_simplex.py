from fractions import Fraction as F

from ttcsd.simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, maximise


def test_textbook_lp():
    # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18
    res = maximise([3, 5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18])
    assert res.status == OPTIMAL
    assert res.value == 36 and res.x == (2, 6)


def test_equalities_and_negative_rhs():
    # max x + y, x + y = 1, -x <= -1/3
    res = maximise([1, 1], [[-1, 0]], [F(-1, 3)], [[1, 1]], [1])
    assert res.status == OPTIMAL and res.value == 1
    assert res.x[0] >= F(1, 3)


def test_infeasible():
    assert maximise([1], [[1]], [1], [[1]], [2]).status == INFEASIBLE


def test_unbounded():
    assert maximise([1, 0], [[-1, 1]], [1]).status == UNBOUNDED


def test_redundant_equalities():
    # the second equality repeats the first; the artificial must be dropped
    res = maximise([1, 2], [], [], [[1, 1], [2, 2]], [1, 2])
    assert res.status == OPTIMAL and res.value == 2 and res.x == (0, 1)


def test_degenerate_vertex_terminates():
    # a classic cycling instance under the largest-coefficient rule
    c = [F(3, 4), -150, F(1, 50), -6]
    a = [[F(1, 4), -60, F(-1, 25), 9], [F(1, 2), -90, F(-1, 50), 3], [0, 0, 1, 0]]
    res = maximise(c, a, [0, 0, 1])
    assert res.status == OPTIMAL
    assert res.value == F(1, 20)


def test_exact_fractions():
    res = maximise([1], [[3]], [1])
    assert res.x == (F(1, 3),) and isinstance(res.value, F)
