"""Certified bounds on the random-walk value V(u, b) built from the Brownian value.

Upper bound: V <= V_w.  Lower bound: V >= V_w * (1 - 6/(5b)) for b > 1600,
and always V >= max(u/b, 0) (stop now, or wait for the walk to return to 0).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numba

from .brownian import AlphaConstant, _alpha_or_default, dd_brownian_value
from .extprec import ExtReal, dd_div, dd_max, dd_mul, dd_sqrt, dd_sub, ext

_jit = numba.njit(cache=True, nogil=True)

LOWER_BOUND_MIN_TIME = 1600
GO_MARGIN = 0.81
STOP_MARGIN = 0.38


class Classification(enum.IntEnum):
    UNKNOWN = 0
    STOP = 1
    GO = 2

    def __str__(self):
        return self.name.capitalize()


@dataclass(frozen=True)
class ValueInterval:
    lo: ExtReal
    hi: ExtReal

    def __post_init__(self):
        object.__setattr__(self, "lo", ext(self.lo))
        object.__setattr__(self, "hi", ext(self.hi))
        if self.hi < self.lo:
            raise ValueError(f"empty interval [{float(self.lo)}, {float(self.hi)}]")

    @property
    def width(self) -> ExtReal:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        x = ext(x)
        return self.lo <= x <= self.hi


@_jit
def dd_value_upper(u, b, ah, al, omh, oml):
    return dd_brownian_value(float(u), 0.0, float(b), 0.0, ah, al, omh, oml)


@_jit
def dd_value_lower(u, b, ah, al, omh, oml):
    ph, pl = dd_div(float(u), 0.0, float(b), 0.0)
    if ph < 0.0:
        ph, pl = 0.0, 0.0
    if b <= LOWER_BOUND_MIN_TIME:
        return ph, pl
    vh, vl = dd_brownian_value(float(u), 0.0, float(b), 0.0, ah, al, omh, oml)
    fh, fl = dd_div(6.0, 0.0, 5.0 * b, 0.0)
    fh, fl = dd_sub(1.0, 0.0, fh, fl)
    sh, sl = dd_mul(vh, vl, fh, fl)
    return dd_max(sh, sl, ph, pl)


def value_upper(u: int, b: int, alpha: AlphaConstant | None = None) -> ExtReal:
    """Certified upper bound on V(u, b)."""
    a = _alpha_or_default(alpha)
    return ExtReal(*dd_value_upper(int(u), int(b), *a.pair))


def value_lower(u: int, b: int, alpha: AlphaConstant | None = None) -> ExtReal:
    """Certified lower bound on V(u, b); the trivial bound when b <= 1600."""
    a = _alpha_or_default(alpha)
    return ExtReal(*dd_value_lower(int(u), int(b), *a.pair))


def value_bounds(u: int, b: int, alpha: AlphaConstant | None = None) -> ValueInterval:
    return ValueInterval(value_lower(u, b, alpha), value_upper(u, b, alpha))


@_jit
def dd_window_code(u, b, ah, al):
    if b <= LOWER_BOUND_MIN_TIME:
        return 0
    sh, sl = dd_sqrt(float(b), 0.0)
    th, tl = dd_mul(ah, al, sh, sl)
    dh, dl = dd_sub(th, tl, float(u), 0.0)
    if dh > GO_MARGIN:
        return 2
    if dh < STOP_MARGIN:
        return 1
    return 0


def one_step_classify(u: int, b: int, alpha: AlphaConstant | None = None) -> Classification:
    """Classify by the distance below the Brownian boundary (b > 1600 only)."""
    a = _alpha_or_default(alpha)
    return Classification(dd_window_code(int(u), int(b), a.alpha.hi, a.alpha.lo))
