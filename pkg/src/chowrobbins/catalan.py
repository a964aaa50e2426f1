"""Exact combinatorics of the backward-induction tree.

Unrolling ``V(u,b) >= (V(u+1,b+1) + V(u-1,b+1))/2`` along every path that
stays at or below ``u`` gives leaf weights ``2^(-2m-1) C_m`` at ``(u+1, b+2m+1)``
and row weights ``2^(-2n+1) B(n,j)`` at ``(u-2j+1, b+2n-1)``, where ``B`` is
the Shapiro Catalan triangle.  Everything here is exact integer/rational.
"""

from __future__ import annotations

import threading
from functools import lru_cache
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Callable


class ConsistencyError(ArithmeticError):
    """A closed-form identity failed to match its direct sum."""


@lru_cache(maxsize=None)
def catalan_number(m: int) -> int:
    if m < 0:
        raise ValueError("m must be non-negative")
    return comb(2 * m, m) // (m + 1)


class _BallotRows:
    # rows of T(m, j) = T(m-1, j-1) + T(m-1, j+1), grown on demand
    def __init__(self):
        self._rows: list[tuple[int, ...]] = [(1,)]
        self._lock = threading.Lock()

    def row(self, m: int) -> tuple[int, ...]:
        if m < len(self._rows):
            return self._rows[m]
        with self._lock:
            while len(self._rows) <= m:
                prev = self._rows[-1]
                k = len(prev)
                new = tuple(
                    (prev[j - 1] if j >= 1 else 0) + (prev[j + 1] if j + 1 < k else 0)
                    for j in range(k + 1)
                )
                self._rows.append(new)
        return self._rows[m]


_T_ROWS = _BallotRows()


def ballot_triangle(m: int, j: int) -> int:
    """T(m, j): number of paths of length m from 0 to level -j that never rise above 0."""
    if m < 0 or j < 0 or j > m:
        return 0
    return _T_ROWS.row(m)[j]


def shapiro_triangle(n: int, j: int) -> int:
    """B(n, j) = (j/n) binom(2n, n-j); zero for j > n."""
    if n < 1 or j < 1:
        raise ValueError("n and j must be at least 1")
    if j > n:
        return 0
    return shapiro_row(n)[j - 1]


@lru_cache(maxsize=1024)
def shapiro_row(n: int) -> tuple[int, ...]:
    """(B(n, 1), ..., B(n, n))."""
    return tuple(j * comb(2 * n, n - j) // n for j in range(1, n + 1))


def central_weight(n: int) -> Fraction:
    """G_n = binom(2n, n) / 4^n."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return Fraction(comb(2 * n, n), 4 ** n)


def _catalan_closed_form(k: int, n: int) -> Fraction:
    g = central_weight(n)
    if k == 0:
        return 1 - g
    if k == 1:
        return n * g + g - 1
    return Fraction(n * n, 3) * g - Fraction(4 * n, 3) * g - g + 1


def catalan_moment_sum(k: int, n: int) -> Fraction:
    """sum_{j<n} C_j 2^(-2j-1) j^k, checked against its closed form."""
    if k not in (0, 1, 2) or n < 1:
        raise ValueError("need k in {0,1,2} and n >= 1")
    # common denominator 2^(2n-1)
    num = sum(catalan_number(j) * j ** k << (2 * (n - 1 - j)) for j in range(n))
    direct = Fraction(num, 2 ** (2 * n - 1))
    closed = _catalan_closed_form(k, n)
    if direct != closed:
        raise ConsistencyError(f"catalan moment k={k} n={n}: {direct} != {closed}")
    return direct


def _triangle_closed_form(k: int, n: int) -> Fraction:
    g = central_weight(n)
    return (
        g,
        Fraction(1, 2),
        n * g,
        Fraction(3 * n - 1, 4),
        n * (2 * n - 1) * g,
        # the often-quoted +2 here is wrong (already at n = 1): the sum is (15n(n-1) + 4)/8
        Fraction(15 * n * (n - 1) + 4, 8),
    )[k]


def triangle_moment_sum(k: int, n: int) -> Fraction:
    """2^(-2n+1) sum_j j^k B(n, j), checked against its closed form."""
    if not 0 <= k <= 5 or n < 1:
        raise ValueError("need 0 <= k <= 5 and n >= 1")
    row = shapiro_row(n)
    direct = Fraction(sum(j ** k * row[j - 1] for j in range(1, n + 1)), 2 ** (2 * n - 1))
    closed = _triangle_closed_form(k, n)
    if direct != closed:
        raise ConsistencyError(f"triangle moment k={k} n={n}: {direct} != {closed}")
    return direct


@dataclass(frozen=True)
class TreeWeights:
    n: int
    leaf: tuple[Fraction, ...]  # leaf[m] weights V(u+1, b+2m+1)
    row: tuple[Fraction, ...]  # row[j-1] weights V(u-2j+1, b+2n-1)

    @property
    def total(self) -> Fraction:
        # every weight has a power-of-two denominator dividing 2^(2n-1)
        den = 1 << (2 * self.n - 1)
        return Fraction(sum(w.numerator * (den // w.denominator) for w in self.leaf + self.row), den)


def tree_weights(n: int) -> TreeWeights:
    if n < 1:
        raise ValueError("n must be at least 1")
    leaf = tuple(Fraction(catalan_number(m), 2 ** (2 * m + 1)) for m in range(n))
    row = tuple(Fraction(shapiro_triangle(n, j), 2 ** (2 * n - 1)) for j in range(1, n + 1))
    return TreeWeights(n, leaf, row)


def tree_sum(n: int, u: int, b: int, value_at: Callable[[int, int], object]):
    """Weighted sum of ``value_at`` over the leaves and the bottom row of the depth-n tree.

    Exact when ``value_at`` returns rationals; otherwise the weights are
    combined with whatever scalar type ``value_at`` yields.
    """
    w = tree_weights(n)
    total = 0
    for m, c in enumerate(w.leaf):
        total = total + c * value_at(u + 1, b + 2 * m + 1)
    for j, c in enumerate(w.row, start=1):
        total = total + c * value_at(u - 2 * j + 1, b + 2 * n - 1)
    return total


def verify_identities(n_max: int = 60) -> dict[str, int]:
    """Run every closed-form identity for n = 1..n_max; raises on the first mismatch."""
    for n in range(1, n_max + 1):
        for k in range(3):
            catalan_moment_sum(k, n)
        for k in range(6):
            triangle_moment_sum(k, n)
        if tree_weights(n).total != 1:
            raise ConsistencyError(f"tree weights at n={n} do not sum to 1")
        t_row = _T_ROWS.row(2 * n - 1)
        for j, b in enumerate(shapiro_row(n), start=1):
            if b != t_row[2 * j - 1]:
                raise ConsistencyError(f"B({n},{j}) != T({2 * n - 1},{2 * j - 1})")
    return {"catalan": 3, "triangle": 6}
