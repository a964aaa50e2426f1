import numpy as np
import pytest

from chowrobbins.engine import beta_table, compare_rules, shifted_rule, simulate


def rule_value_dp(beta, max_n):
    """Exact expected payoff of a threshold rule by forward recursion on the walk law."""
    off = max_n
    p = np.zeros(2 * max_n + 3)
    p[off] = 1.0
    total = 0.0
    for n in range(1, max_n + 1):
        q = np.zeros_like(p)
        q[1:] += 0.5 * p[:-1]
        q[:-1] += 0.5 * p[1:]
        d = np.arange(len(q)) - off
        if n == max_n:
            stop = np.ones(len(q), dtype=bool)
            pay = np.maximum(d, 0) / n
        else:
            stop = d >= beta[n]
            pay = d / n
        total += float(np.sum(q[stop] * pay[stop]))
        q[stop] = 0.0
        p = q
    return total


@pytest.fixture(scope="module")
def table(small_run):
    return beta_table(small_run.records)


def test_matches_exact_dp(table):
    max_n = table.n_max
    exact = rule_value_dp(table.beta, max_n)
    res = simulate(table, 200_000, seed=1, max_n=max_n)
    assert abs(res.mean - exact) < 4 * res.stderr
    assert 0 < res.forced_fraction < 0.2


def test_matches_exact_dp_shifted(table):
    rule = shifted_rule(table, 1)
    exact = rule_value_dp(rule, 2000)
    res = simulate(rule, 200_000, seed=2, max_n=2000)
    assert abs(res.mean - exact) < 4 * res.stderr


def test_brute_force_tiny():
    # all 2^12 paths enumerated
    beta = np.array([0, 1, 2, 1, 2, 3, 2, 3, 2, 3, 4, 3, 4])
    max_n = 12
    tot = 0.0
    for bits in range(1 << max_n):
        d = 0
        for n in range(1, max_n + 1):
            d += 1 if (bits >> (n - 1)) & 1 else -1
            if d >= beta[n]:
                tot += d / n
                break
            if n == max_n:
                tot += max(d, 0) / n
    exact = tot / (1 << max_n)
    res = simulate(beta, 400_000, seed=3)
    assert abs(res.mean - exact) < 4 * res.stderr
    assert abs(rule_value_dp(beta, max_n) - exact) < 1e-12


def test_determinism_and_threads(table):
    rules = [table, shifted_rule(table, 1), shifted_rule(table, -1)]
    a = compare_rules(rules, 150_000, seed=9, max_n=2000, threads=1)
    b = compare_rules(rules, 150_000, seed=9, max_n=2000, threads=3)
    c = compare_rules(rules, 150_000, seed=9, max_n=2000, threads=1)
    assert a == b == c
    d = compare_rules(rules, 150_000, seed=10, max_n=2000)
    assert d.results[0].mean != a.results[0].mean


def test_paired_difference(table):
    cmp = compare_rules([table, table], 50_000, seed=4, max_n=2000)
    assert cmp.diff_mean[1] == 0 and cmp.diff_stderr[1] == 0
    assert cmp.results[0] == cmp.results[1]
    cmp = compare_rules([table, shifted_rule(table, 1)], 100_000, seed=5, max_n=2000)
    # paired errors are much smaller than the marginal ones
    assert cmp.diff_stderr[1] < cmp.results[0].stderr
    assert cmp.z_score(1) > 0


def test_rule_forms():
    arr = np.array([0, 1, 2, 1, 2, 3, 2, 3, 2])
    m = {n: int(b) for n, b in enumerate(arr)}
    assert simulate(arr, 20_000, 1) == simulate(m, 20_000, 1)
    with pytest.raises(ValueError):
        simulate(arr, 0, 1)
    with pytest.raises(ValueError):
        simulate(arr, 100, 1, max_n=9)


def test_shifted_rule(table):
    up = shifted_rule(table, 1)
    down = shifted_rule(table, -1)
    assert up[1] == table[1] + 2 and down[5] == table[5] - 2
    assert up[0] == table.beta[0]
