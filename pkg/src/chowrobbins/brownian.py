"""Brownian-motion analog of the game: Shepp's constant and the value function.

Positions are ``(u, b)`` with ``u`` the displacement (walk steps) and
``b > 0`` the elapsed time (flips).  The optimal Brownian rule stops on the
curve ``u = alpha*sqrt(b)``; below it the value is

    V_w(u, b) = (1 - alpha^2) / sqrt(b) * H(u / sqrt(b)),   H = G/g,

and above it the value is the stopping payoff ``u/b``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import NamedTuple

import numba

from .extprec import (
    DomainError,
    ExtReal,
    dd_add,
    dd_div,
    dd_le,
    dd_mills_h,
    dd_mul,
    dd_sqrt,
    ext,
    mills_h,
    sqrt_ext,
)

_jit = numba.njit(cache=True, nogil=True)

MAX_POLY_DEGREE = 16


@dataclass(frozen=True)
class BrownianPoint:
    u: ExtReal
    b: ExtReal

    def __post_init__(self):
        object.__setattr__(self, "u", ext(self.u))
        object.__setattr__(self, "b", ext(self.b))
        if self.b.hi <= 0.0:
            raise DomainError("time coordinate must be positive")


@dataclass(frozen=True)
class AlphaConstant:
    """Root of ``a = (1 - a^2) H(a)`` with ``1 - a^2`` cached."""

    alpha: ExtReal
    one_minus_alpha_sq: ExtReal
    residual: ExtReal

    @property
    def pair(self) -> tuple[float, float, float, float]:
        return (self.alpha.hi, self.alpha.lo,
                self.one_minus_alpha_sq.hi, self.one_minus_alpha_sq.lo)


class SolverError(RuntimeError):
    pass


def _alpha_equation(a: ExtReal) -> ExtReal:
    return a - (1 - a * a) * mills_h(a)


def solve_alpha(tolerance=1e-28, max_iter: int = 200) -> AlphaConstant:
    """Locate Shepp's constant by bisection on (0.8, 0.9), finished with secant steps."""
    tolerance = ext(tolerance)
    if tolerance.hi < 1e-28 * (1 - 1e-15):
        raise DomainError("tolerance below 1e-28 is not attainable")
    lo, hi = ext(0.8), ext(0.9)
    f_lo, f_hi = _alpha_equation(lo), _alpha_equation(hi)
    if not (f_lo.hi < 0.0 < f_hi.hi):
        raise SolverError("root not bracketed")
    for it in range(max_iter):
        if it < 25 or (hi - lo).hi > 1e-12:
            mid = (lo + hi) * 0.5
        else:
            mid = lo - f_lo * (hi - lo) / (f_hi - f_lo)
            if not (lo < mid < hi):
                mid = (lo + hi) * 0.5
        f_mid = _alpha_equation(mid)
        if abs(f_mid) <= tolerance:
            omas = 1 - mid * mid
            return AlphaConstant(mid, omas, abs(f_mid))
        if f_mid.hi < 0.0:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    raise SolverError(f"no convergence in {max_iter} iterations")


@functools.lru_cache(maxsize=1)
def shepp_alpha() -> AlphaConstant:
    """The process-wide constant, solved once."""
    return solve_alpha()


def _alpha_or_default(alpha: AlphaConstant | None) -> AlphaConstant:
    return shepp_alpha() if alpha is None else alpha


# ---------------------------------------------------------------------------
# value function


@_jit
def dd_brownian_value(uh, ul, bh, bl, ah, al, omh, oml):
    """V_w(u, b) in double-double; ``(ah, al)`` is alpha, ``(omh, oml)`` is 1 - alpha^2."""
    sbh, sbl = dd_sqrt(bh, bl)
    bdh, bdl = dd_mul(ah, al, sbh, sbl)
    if not dd_le(uh, ul, bdh, bdl):
        return dd_div(uh, ul, bh, bl)
    xh, xl = dd_div(uh, ul, sbh, sbl)
    hh, hl = dd_mills_h(xh, xl)
    ph, pl = dd_mul(omh, oml, hh, hl)
    return dd_div(ph, pl, sbh, sbl)


@_jit
def dd_above_boundary(uh, ul, bh, bl, ah, al):
    sbh, sbl = dd_sqrt(bh, bl)
    bdh, bdl = dd_mul(ah, al, sbh, sbl)
    return not dd_le(uh, ul, bdh, bdl)


def brownian_value(u, b, alpha: AlphaConstant | None = None) -> ExtReal:
    """Optimal expected payoff of the Brownian game started at ``(u, b)``."""
    u, b = ext(u), ext(b)
    if b.hi <= 0.0:
        raise DomainError("time coordinate must be positive")
    a = _alpha_or_default(alpha)
    return ExtReal(*dd_brownian_value(u.hi, u.lo, b.hi, b.lo, *a.pair))


def value_at(point: BrownianPoint, alpha: AlphaConstant | None = None) -> ExtReal:
    return brownian_value(point.u, point.b, alpha)


def boundary_position(b, alpha: AlphaConstant | None = None) -> ExtReal:
    """``alpha*sqrt(b)``, the stopping curve at time ``b``."""
    return _alpha_or_default(alpha).alpha * sqrt_ext(b)


# ---------------------------------------------------------------------------
# derivatives of H and of V_w on the boundary


class MillsPolynomials(NamedTuple):
    """``H^(n) = P_n H + Q_n``; coefficients listed from the constant term up."""

    n: int
    p: tuple[int, ...]
    q: tuple[int, ...]


def _poly_derivative(c):
    return [k * c[k] for k in range(1, len(c))] or [0]


def _poly_add(a, b):
    out = [0] * max(len(a), len(b))
    for i, v in enumerate(a):
        out[i] += v
    for i, v in enumerate(b):
        out[i] += v
    return out


def _trim(c):
    c = list(c)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return tuple(c)


@functools.lru_cache(maxsize=None)
def mills_polynomials(n: int) -> MillsPolynomials:
    """Exact P_n, Q_n from P_{k+1} = P_k' + x P_k, Q_{k+1} = Q_k' + P_k."""
    if not 0 <= n <= MAX_POLY_DEGREE:
        raise DomainError(f"degree must lie in [0, {MAX_POLY_DEGREE}]")
    if n == 0:
        return MillsPolynomials(0, (1,), (0,))
    prev = mills_polynomials(n - 1)
    p, q = list(prev.p), list(prev.q)
    new_p = _poly_add(_poly_derivative(p), [0] + p)
    new_q = _poly_add(_poly_derivative(q), p)
    return MillsPolynomials(n, _trim(new_p), _trim(new_q))


def eval_poly(coeffs, x) -> ExtReal:
    x = ext(x)
    acc = ext(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def derivative_at_boundary(n: int, b, alpha: AlphaConstant | None = None) -> ExtReal:
    """n-th u-derivative of V_w at ``u = alpha*sqrt(b)``, using exact P_n and Q_n."""
    if not 1 <= n <= 5:
        raise DomainError("derivative order must lie in [1, 5]")
    a = _alpha_or_default(alpha)
    b = ext(b)
    if b.hi <= 0.0:
        raise DomainError("time coordinate must be positive")
    pq = mills_polynomials(n)
    core = a.alpha * eval_poly(pq.p, a.alpha) + a.one_minus_alpha_sq * eval_poly(pq.q, a.alpha)
    return core / sqrt_ext(b) ** (n + 1)


# ---------------------------------------------------------------------------
# polynomial-in-delta bounds below the boundary


class TaylorBounds(NamedTuple):
    """Expansions in ``delta = alpha*sqrt(b) - u`` about the boundary.

    ``upper2 >= upper4 >= V_w >= lower5 >= lower3`` in the working window
    ``0 <= delta <= 1``, ``b > 1600``.
    """

    upper2: ExtReal
    lower3: ExtReal
    upper4: ExtReal
    lower5: ExtReal


def taylor_bounds(u, b, alpha: AlphaConstant | None = None) -> TaylorBounds:
    a = _alpha_or_default(alpha)
    u, b = ext(u), ext(b)
    al = a.alpha
    sb = sqrt_ext(b)
    delta = al * sb - u
    if delta.hi < 0.0:
        raise DomainError("point lies above the stopping curve")
    ratio = u / b
    d2 = delta * delta
    d3 = d2 * delta
    a2 = al * al
    upper2 = ratio + al * d2 / (b * sb)
    lower3 = ratio * (1 + d2 / b)
    upper3_core = upper2 - (1 + a2) * d3 / (3 * b * b)
    upper4 = upper3_core + (4 * al + a2 * al) * d2 * d2 / (12 * b * b * sb)
    lower5 = upper4 - (4 + 8 * a2 + a2 * a2) * d3 * d2 / (60 * b * b * b)
    return TaylorBounds(upper2, lower3, upper4, lower5)


def taylor_bound(u, b, order: int, alpha: AlphaConstant | None = None) -> ExtReal:
    """One bound by expansion order: 2 and 4 are upper bounds, 3 and 5 lower."""
    tb = taylor_bounds(u, b, alpha)
    try:
        return {2: tb.upper2, 3: tb.lower3, 4: tb.upper4, 5: tb.lower5}[order]
    except KeyError:
        raise DomainError("order must be one of 2, 3, 4, 5") from None
