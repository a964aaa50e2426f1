"""Monte Carlo payoff of threshold stop rules, with paired comparisons.

A rule is an integer array ``beta`` indexed by n: stop at the first n >= 1
with ``d >= beta[n]``.  A path still running at ``max_n`` is scored
``max(d/max_n, 0)``: the better of stopping there and waiting for the
(recurrent) walk to come back to 0, both feasible strategies.  Several
rules are simulated on the same coin flips, so their differences have a
small paired standard error.

Trials are cut into fixed-size chunks, each with its own PCG64 stream spawned
from the seed, and chunk sums are combined in chunk order: the estimate is
bit-identical for any thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numba
import numpy as np

from .tables import BetaTable

CHUNK = 1 << 16
BITS = 62
SMALL = 8


@numba.njit(cache=True, nogil=True)
def _popcount(x):
    x = x - ((x >> 1) & 0x5555555555555555)
    x = (x & 0x3333333333333333) + ((x >> 2) & 0x3333333333333333)
    x = (x + (x >> 4)) & 0x0F0F0F0F0F0F0F0F
    return (x * 0x0101010101010101) >> 56 & 0xFF


@numba.njit(cache=True, nogil=True)
def _run_chunk(betas, window_min, window_small, max_n, gen, trials):
    """Sums over ``trials`` paths: payoff, payoff^2 per rule, and (p_r - p_0), (p_r - p_0)^2."""
    k = betas.shape[0]
    sums = np.zeros((4, k))
    pay = np.zeros(k)
    done = np.zeros(k, dtype=np.bool_)
    forced = np.zeros(k, dtype=np.int64)
    for _ in range(trials):
        d = 0
        n = 0
        active = k
        done[:] = False
        while active > 0:
            x = gen.integers(0, 1 << BITS)
            # a block of steps that cannot reach any threshold is taken at once
            if n + BITS < max_n and d + BITS < window_min[n]:
                d += 2 * _popcount(x) - BITS
                n += BITS
                continue
            rem = BITS
            while rem > 0 and active > 0:
                if rem >= SMALL and n + SMALL < max_n and d + SMALL < window_small[n]:
                    d += 2 * _popcount(x & 0xFF) - SMALL
                    x >>= SMALL
                    n += SMALL
                    rem -= SMALL
                    continue
                n += 1
                d += 1 if (x & 1) else -1
                x >>= 1
                rem -= 1
                for r in range(k):
                    if done[r]:
                        continue
                    if d >= betas[r, n]:
                        done[r] = True
                        active -= 1
                        pay[r] = d / n
                    elif n == max_n:
                        done[r] = True
                        active -= 1
                        pay[r] = d / n if d > 0 else 0.0
                        forced[r] += 1
        for r in range(k):
            sums[0, r] += pay[r]
            sums[1, r] += pay[r] * pay[r]
            dlt = pay[r] - pay[0]
            sums[2, r] += dlt
            sums[3, r] += dlt * dlt
    return sums, forced


def _rule_array(rule, max_n: int | None) -> tuple[np.ndarray, int]:
    if isinstance(rule, BetaTable):
        arr = rule.beta
        top = rule.n_max
    elif isinstance(rule, Mapping):
        top = max(rule)
        arr = np.zeros(top + 1, dtype=np.int64)
        for n, b in rule.items():
            arr[n] = b
    else:
        arr = np.asarray(rule, dtype=np.int64)
        top = len(arr) - 1
    if max_n is None:
        max_n = top
    if max_n > top or max_n < 1:
        raise ValueError(f"rule is defined up to n = {top}, asked for max_n = {max_n}")
    return np.ascontiguousarray(arr[: max_n + 1], dtype=np.int64), max_n


def _window_min(betas: np.ndarray, max_n: int, width: int) -> np.ndarray:
    # out[n] = min over rules and over times n+1..n+width of beta
    big = np.iinfo(np.int64).max // 4
    combined = betas.min(axis=0)
    padded = np.concatenate([combined, np.full(width + 1, big, dtype=np.int64)])
    view = np.lib.stride_tricks.sliding_window_view(padded[1:], width)
    return np.ascontiguousarray(view[: max_n + 1].min(axis=1))


@dataclass(frozen=True)
class SimulationResult:
    mean: float
    stderr: float
    trials: int
    forced_fraction: float  # paths stopped only by max_n


@dataclass(frozen=True)
class ComparisonResult:
    results: tuple[SimulationResult, ...]
    diff_mean: tuple[float, ...]  # mean of (rule r - rule 0) on shared paths
    diff_stderr: tuple[float, ...]

    def z_score(self, r: int) -> float:
        """How many paired standard errors rule 0 beats rule r by."""
        se = self.diff_stderr[r]
        return math.inf if se == 0 else -self.diff_mean[r] / se


def compare_rules(rules: Sequence, trials: int, seed: int, max_n: int | None = None,
                  threads: int = 1, chunk: int = CHUNK) -> ComparisonResult:
    if trials <= 0:
        raise ValueError("trials must be positive")
    arrays = []
    top = None
    for rule in rules:
        arr, m = _rule_array(rule, max_n)
        top = m if top is None else min(top, m)
        arrays.append(arr)
    betas = np.stack([a[: top + 1] for a in arrays])
    window_min = _window_min(betas, top, BITS)
    window_small = _window_min(betas, top, SMALL)
    sizes = [chunk] * (trials // chunk) + ([trials % chunk] if trials % chunk else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))

    def work(i):
        gen = np.random.Generator(np.random.PCG64(seeds[i]))
        return _run_chunk(betas, window_min, window_small, top, gen, sizes[i])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, range(len(sizes))))
    else:
        parts = [work(i) for i in range(len(sizes))]
    sums = np.zeros((4, len(rules)))
    forced = np.zeros(len(rules), dtype=np.int64)
    for s, f in parts:
        sums += s
        forced += f
    k = len(rules)

    def moments(s1, s2):
        mean = s1 / trials
        var = max(s2 / trials - mean * mean, 0.0) * trials / max(trials - 1, 1)
        return float(mean), math.sqrt(var / trials)

    results = []
    d_mean, d_se = [], []
    for r in range(k):
        m, se = moments(sums[0, r], sums[1, r])
        results.append(SimulationResult(m, se, trials, float(forced[r]) / trials))
        dm, dse = moments(sums[2, r], sums[3, r])
        d_mean.append(dm)
        d_se.append(dse)
    return ComparisonResult(tuple(results), tuple(d_mean), tuple(d_se))


def simulate(rule, trials: int, seed: int, max_n: int | None = None,
             threads: int = 1) -> SimulationResult:
    """Mean payoff d/n of one rule from (0, 0), with its standard error."""
    return compare_rules([rule], trials, seed, max_n, threads).results[0]


def shifted_rule(rule: BetaTable, levels: int) -> np.ndarray:
    """The rule moved by ``levels`` reachable heights (2 units of d each).

    Thresholds never drop below the smallest positive reachable height
    (1 or 2 by parity): stopping at d <= 0 is never worth considering.
    """
    out = rule.beta.copy()
    n = np.arange(len(out))
    out[1:] = np.maximum(out[1:] + 2 * levels, 2 - n[1:] % 2)
    return out
