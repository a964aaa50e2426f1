"""Exact-rational backward induction over the full triangle, for cross-checks.

Row n is held as integer numerators over the common denominator
``D_n = 2^(N-n) * M`` with ``M`` divisible by every n <= N, so averaging the
two children is a plain integer add and no rational is ever normalized
inside the loop.  Two games run side by side: one started from a certified
lower bound at the horizon, one from an upper bound; their values enclose V.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .sweep import GO, STOP, UNKNOWN
from .types import BoundaryRecord

MAX_HORIZON = 5000
MAX_HEIGHT = 20


def crude_horizon_bounds(d: int, n: int) -> tuple[Fraction, Fraction]:
    """[max(d/n, 0), max(d, 0)/n + 1/isqrt(n)]: stop-now / wait-for-zero below, V_w above."""
    lo = max(Fraction(d, n), Fraction(0))
    hi = Fraction(max(d, 0), n) + Fraction(1, math.isqrt(n))
    return lo, hi


def walk_horizon_bounds(pad: float = 0.0) -> Callable[[int, int], tuple[Fraction, Fraction]]:
    """The sweep's own injected bounds, converted exactly to rationals."""
    from .sweep import inject_bounds

    def bounds(d: int, n: int) -> tuple[Fraction, Fraction]:
        iv = inject_bounds(d, n, pad=pad)
        return iv.lo.to_fraction(), iv.hi.to_fraction()

    return bounds


@dataclass
class OracleResult:
    horizon: int
    d_max: int
    codes: np.ndarray  # codes[n, d + d_max] for 1 <= n < horizon, -1 when |d| > n or parity differs
    rows: dict[int, tuple[dict[int, Fraction], dict[int, Fraction]]] = field(repr=False)
    start: tuple[Fraction, Fraction] | None = None

    def code(self, d: int, n: int) -> int:
        return int(self.codes[n, d + self.d_max])

    def interval(self, d: int, n: int) -> tuple[Fraction, Fraction]:
        lo, hi = self.rows[n]
        return lo[d], hi[d]

    def lower_value(self, d: int, n: int) -> Fraction:
        """Value of the game that pays the horizon lower bound if never stopped."""
        return self.rows[n][0][d]

    def upper_value(self, d: int, n: int) -> Fraction:
        return self.rows[n][1][d]

    def last_stop(self, d: int) -> int | None:
        """Largest n < horizon with a certified Stop at height d."""
        col = self.codes[:, d + self.d_max]
        hits = np.nonzero(col == STOP)[0]
        return int(hits[-1]) if len(hits) else None

    def records(self) -> list[BoundaryRecord]:
        """n1/n2 per height, extracted exactly as the sweep does (scanning n downward)."""
        out = []
        for d in range(1, self.d_max + 1):
            col = self.codes[:, d + self.d_max]
            n1 = n2 = -1
            broken = False
            for n in range(self.horizon - 1, d - 1, -1):
                code = col[n]
                if code < 0:
                    continue
                if code == STOP and n1 < 0:
                    n1 = n
                if not broken:
                    if code == GO:
                        n2 = n
                    else:
                        broken = True
            out.append(BoundaryRecord(d, n1, n2))
        return out


def exact_oracle(
    d_max: int,
    horizon: int,
    keep_n: int = 0,
    horizon_bounds: Callable[[int, int], tuple[Fraction, Fraction]] = crude_horizon_bounds,
) -> OracleResult:
    """Classify every (d, n) with |d| <= d_max, n < horizon in exact arithmetic.

    ``keep_n`` retains the full exact enclosures for rows n <= keep_n.
    """
    if not 1 <= d_max <= MAX_HEIGHT:
        raise ValueError(f"d_max must lie in [1, {MAX_HEIGHT}]")
    if not 2 <= horizon <= MAX_HORIZON:
        raise ValueError(f"horizon must lie in [2, {MAX_HORIZON}]")
    N = horizon
    terminal = [horizon_bounds(d, N) for d in range(-N, N + 1, 2)]
    m = math.lcm(*range(1, N + 1))
    for lo, hi in terminal:
        m = math.lcm(m, Fraction(lo).denominator, Fraction(hi).denominator)
    lo_row = [int(Fraction(lo) * m) for lo, _ in terminal]
    hi_row = [int(Fraction(hi) * m) for _, hi in terminal]

    codes = np.full((N, 2 * d_max + 1), -1, dtype=np.int8)
    rows = {}
    if N <= keep_n:
        rows[N] = _fractions(N, lo_row, hi_row, m)
    for n in range(N - 1, 0, -1):
        # row n holds d = -n..n; children of index i are i (d-1) and i+1 (d+1) in row n+1
        unit = (m // n) << (N - n)
        new_lo = []
        new_hi = []
        for i in range(n + 1):
            d = 2 * i - n
            pay = d * unit
            c_lo = lo_row[i] + lo_row[i + 1]
            c_hi = hi_row[i] + hi_row[i + 1]
            if -d_max <= d <= d_max:
                if c_hi <= pay:
                    code = STOP
                elif c_lo > pay:
                    code = GO
                else:
                    code = UNKNOWN
                codes[n, d + d_max] = code
            new_lo.append(c_lo if c_lo > pay else pay)
            new_hi.append(c_hi if c_hi > pay else pay)
        lo_row, hi_row = new_lo, new_hi
        if n <= keep_n:
            rows[n] = _fractions(n, lo_row, hi_row, m << (N - n))
    den = m << N
    start = (Fraction(lo_row[0] + lo_row[1], den), Fraction(hi_row[0] + hi_row[1], den))
    return OracleResult(N, d_max, codes, rows, start)


def _fractions(n, lo_row, hi_row, den):
    lo = {2 * i - n: Fraction(v, den) for i, v in enumerate(lo_row)}
    hi = {2 * i - n: Fraction(v, den) for i, v in enumerate(hi_row)}
    return lo, hi
