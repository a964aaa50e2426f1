import threading
from fractions import Fraction
from math import comb, pi, sqrt

import pytest

from chowrobbins.catalan import (ConsistencyError, ballot_triangle, catalan_moment_sum,
                                 catalan_number, central_weight, shapiro_triangle,
                                 triangle_moment_sum, tree_sum, tree_weights, verify_identities)
from chowrobbins.engine import exact_oracle, walk_horizon_bounds


def test_catalan_numbers():
    assert [catalan_number(m) for m in range(4)] == [1, 1, 2, 5]
    assert catalan_number(4) == 14
    assert catalan_number(5) == sum(catalan_number(i) * catalan_number(4 - i) for i in range(5)) == 42
    with pytest.raises(ValueError):
        catalan_number(-1)


def test_ballot_triangle():
    assert [ballot_triangle(7, j) for j in range(8)] == [0, 14, 0, 14, 0, 6, 0, 1]
    assert [ballot_triangle(4, j) for j in range(5)] == [2, 0, 3, 0, 1]
    assert ballot_triangle(0, 0) == 1
    for m in range(10):
        assert ballot_triangle(m, m + 1) == 0
        assert ballot_triangle(m, m + 5) == 0
    for m in range(1, 40):
        for j in range(1, m + 1):
            assert ballot_triangle(m, j) == ballot_triangle(m - 1, j - 1) + ballot_triangle(m - 1, j + 1)


def test_shapiro_triangle():
    assert [shapiro_triangle(3, j) for j in (1, 2, 3)] == [5, 4, 1]
    assert [shapiro_triangle(4, j) for j in (1, 2, 3, 4)] == [14, 14, 6, 1]
    assert shapiro_triangle(4, 2) == 14
    assert shapiro_triangle(3, 4) == 0
    for n in range(1, 51):
        assert shapiro_triangle(n, 1) == catalan_number(n)


def test_shapiro_identities():
    for n in range(1, 61):
        for j in range(1, n + 1):
            b = shapiro_triangle(n, j)
            assert b == ballot_triangle(2 * n - 1, 2 * j - 1)
            assert b == comb(2 * n - 1, n - j) - (comb(2 * n - 1, n - j - 1) if n - j - 1 >= 0 else 0)
            assert b * n == j * comb(2 * n, n - j)
    for n in range(2, 61):
        for k in range(2, 61):
            assert shapiro_triangle(n, k) == (shapiro_triangle(n - 1, k - 1)
                                              + 2 * shapiro_triangle(n - 1, k)
                                              + shapiro_triangle(n - 1, k + 1))


def test_central_weight():
    assert central_weight(0) == 1
    assert central_weight(1) == Fraction(1, 2)
    assert central_weight(2) == Fraction(3, 8)
    assert central_weight(3) == Fraction(5, 16)
    for n in range(1, 400):
        g = float(central_weight(n))
        assert 1 / sqrt(pi * (n + 0.5)) <= g <= 1 / sqrt(pi * n)


def test_central_weight_bounds_to_1e4():
    # G_n = G_(n-1) (2n-1)/(2n) in floats; float rounding only, well inside the gaps
    g = 1.0
    for n in range(1, 10_001):
        g *= (2 * n - 1) / (2 * n)
        assert 1 / sqrt(pi * (n + 0.5)) * (1 - 1e-12) <= g <= 1 / sqrt(pi * n) * (1 + 1e-12)
    assert abs(float(central_weight(10_000)) - g) < 1e-14


def test_catalan_moment_examples():
    assert catalan_moment_sum(0, 2) == Fraction(5, 8) == 1 - Fraction(3, 8)
    assert catalan_moment_sum(1, 2) == Fraction(1, 8)
    g3 = central_weight(3)
    assert catalan_moment_sum(2, 3) == Fraction(1, 3) * 9 * g3 - 4 * g3 - g3 + 1 == Fraction(3, 8)
    with pytest.raises(ValueError):
        catalan_moment_sum(3, 2)


def test_triangle_moment_examples():
    assert triangle_moment_sum(1, 2) == Fraction(1, 2)
    assert triangle_moment_sum(0, 2) == Fraction(3, 8)
    assert triangle_moment_sum(3, 2) == Fraction(5, 4)
    with pytest.raises(ValueError):
        triangle_moment_sum(6, 2)


def test_fifth_moment_closed_form():
    # the correct closed form; the +2 variant is off by exactly 1/4
    for n in range(1, 80):
        v = triangle_moment_sum(5, n)
        assert v == Fraction(15 * n * (n - 1) + 4, 8)
        assert v - Fraction(15 * n * (n - 1) + 2, 8) == Fraction(1, 4)


def test_moment_sums_do_raise(monkeypatch):
    import chowrobbins.catalan as cat
    monkeypatch.setattr(cat, "_catalan_closed_form", lambda k, n: Fraction(0))
    with pytest.raises(ConsistencyError):
        cat.catalan_moment_sum(0, 3)


def test_tree_weights():
    w = tree_weights(2)
    assert w.leaf == (Fraction(1, 2), Fraction(1, 8))
    assert w.row == (Fraction(2, 8), Fraction(1, 8))
    assert w.total == 1
    w = tree_weights(1)
    assert w.leaf == (Fraction(1, 2),) and w.row == (Fraction(1, 2),)
    w = tree_weights(4)
    assert [x * 2 ** 7 for x in w.row] == [14, 14, 6, 1]
    for n in range(1, 201):
        w = tree_weights(n)
        assert w.total == 1
        assert sum(w.leaf) == 1 - central_weight(n)
        assert all(x > 0 for x in w.leaf + w.row)
    with pytest.raises(ValueError):
        tree_weights(0)


def test_tree_sum_simple():
    f = lambda u, b: Fraction(u * u + 3, b)
    for u, b in ((0, 10), (3, 7), (-2, 20)):
        assert tree_sum(1, u, b, f) == Fraction(1, 2) * f(u + 1, b + 1) + Fraction(1, 2) * f(u - 1, b + 1)
    for n in range(1, 12):
        assert tree_sum(n, 2, 10, lambda u, b: Fraction(7, 3)) == Fraction(7, 3)


def test_verify_identities_summary():
    assert verify_identities(120) == {"catalan": 3, "triangle": 6}


def test_memo_threads():
    out = []

    def work(m):
        out.append(ballot_triangle(300 + m % 7, 11))

    ts = [threading.Thread(target=work, args=(i,)) for i in range(16)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    assert sorted(set(out)) == sorted({ballot_triangle(300 + m, 11) for m in range(7)})


@pytest.fixture(scope="module")
def exact_games():
    # both exact games from horizon 400, all rows n <= 60 kept
    return exact_oracle(8, 400, keep_n=60, horizon_bounds=walk_horizon_bounds())


@pytest.mark.parametrize("side", [0, 1])
def test_tree_sum_matches_value(exact_games, side):
    def V(u, b):
        return exact_games.rows[b][side][u]

    for b in range(1, 31):
        for u in range(-b, b + 1, 2):
            v = V(u, b)
            pay = Fraction(u, b)
            sums = [tree_sum(n, u, b, V) for n in range(1, 11)]
            for n, s in enumerate(sums, start=1):
                assert max(pay, s) == v, (u, b, n)
            if sums[0] > pay:
                assert all(s == sums[0] for s in sums)
            for s1, s2 in zip(sums, sums[1:]):
                assert s2 <= s1
