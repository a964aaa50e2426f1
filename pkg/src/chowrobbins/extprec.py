"""Double-double arithmetic and the special functions built on it.

A value is carried as an unevaluated sum ``hi + lo`` of two doubles with
``|lo| <= ulp(hi)/2``, which gives roughly 32 significant decimal digits.

The low-level kernels operate on bare ``(hi, lo)`` float pairs and are
compiled with numba so that the backward-induction sweep can call them in
its inner loop.  :class:`ExtReal` is the immutable Python-level scalar.
"""

from __future__ import annotations

import math
from fractions import Fraction
from decimal import Decimal, localcontext

import numba

__all__ = [
    "DomainError",
    "RangeError",
    "ExtReal",
    "ext",
    "exp_ext",
    "sqrt_ext",
    "normal_cdf_pdf",
    "mills_h",
    "PI",
    "SQRT_2PI",
]

_jit = numba.njit(cache=True, nogil=True, error_model="numpy")

_SPLITTER = 134217729.0  # 2**27 + 1

LN2_HI, LN2_LO = 0.6931471805599453, 2.3190468138462996e-17
PI_HI, PI_LO = 3.141592653589793, 1.2246467991473532e-16
SQRT_2PI_HI, SQRT_2PI_LO = 2.5066282746310007, -1.8328579980459167e-16
SQRT_PI_2_HI, SQRT_PI_2_LO = 1.2533141373155003, -9.164289990229583e-17

# |x| at which the Mills ratio switches from the power series to the
# continued fraction.
SERIES_CF_SEAM = 3.0


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(OverflowError):
    """Result not representable in double-double range."""


# ---------------------------------------------------------------------------
# error-free transformations


@_jit
def two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@_jit
def quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


@_jit
def split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


@_jit
def two_prod(a, b):
    p = a * b
    ah, al = split(a)
    bh, bl = split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


# ---------------------------------------------------------------------------
# double-double field operations


@_jit
def dd_add(ah, al, bh, bl):
    s1, s2 = two_sum(ah, bh)
    t1, t2 = two_sum(al, bl)
    s2 += t1
    s1, s2 = quick_two_sum(s1, s2)
    s2 += t2
    return quick_two_sum(s1, s2)


@_jit
def dd_sub(ah, al, bh, bl):
    return dd_add(ah, al, -bh, -bl)


@_jit
def dd_add_d(ah, al, b):
    s1, s2 = two_sum(ah, b)
    s2 += al
    return quick_two_sum(s1, s2)


@_jit
def dd_mul(ah, al, bh, bl):
    p1, p2 = two_prod(ah, bh)
    p2 += ah * bl + al * bh
    return quick_two_sum(p1, p2)


@_jit
def dd_mul_d(ah, al, b):
    p1, p2 = two_prod(ah, b)
    p2 += al * b
    return quick_two_sum(p1, p2)


@_jit
def dd_sqr(ah, al):
    p1, p2 = two_prod(ah, ah)
    p2 += 2.0 * ah * al
    return quick_two_sum(p1, p2)


@_jit
def dd_div(ah, al, bh, bl):
    q1 = ah / bh
    ph, pl = dd_mul_d(bh, bl, q1)
    rh, rl = dd_sub(ah, al, ph, pl)
    q2 = rh / bh
    ph, pl = dd_mul_d(bh, bl, q2)
    rh, rl = dd_sub(rh, rl, ph, pl)
    q3 = rh / bh
    q1, q2 = quick_two_sum(q1, q2)
    return dd_add_d(q1, q2, q3)


@_jit
def dd_div_d(ah, al, b):
    return dd_div(ah, al, b, 0.0)


@_jit
def dd_sqrt(ah, al):
    if ah <= 0.0:
        return 0.0, 0.0
    x = 1.0 / math.sqrt(ah)
    ax = ah * x
    sh, sl = two_prod(ax, ax)
    rh, _ = dd_sub(ah, al, sh, sl)
    return two_sum(ax, rh * (x * 0.5))


@_jit
def dd_lt(ah, al, bh, bl):
    return ah < bh or (ah == bh and al < bl)


@_jit
def dd_le(ah, al, bh, bl):
    return ah < bh or (ah == bh and al <= bl)


@_jit
def dd_max(ah, al, bh, bl):
    if dd_lt(ah, al, bh, bl):
        return bh, bl
    return ah, al


# ---------------------------------------------------------------------------
# elementary and special functions


@_jit
def dd_exp(ah, al):
    """exp for arguments already checked to lie in [-700, 709]."""
    if ah == 0.0 and al == 0.0:
        return 1.0, 0.0
    k = math.floor(ah / LN2_HI + 0.5)
    ph, pl = dd_mul_d(LN2_HI, LN2_LO, k)
    rh, rl = dd_sub(ah, al, ph, pl)
    # scale down by 2**-9; the expm1 doubling below recovers it
    rh *= 1.0 / 512.0
    rl *= 1.0 / 512.0
    sh, sl = rh, rl
    th, tl = rh, rl
    for j in range(2, 30):
        th, tl = dd_mul(th, tl, rh, rl)
        th, tl = dd_div_d(th, tl, float(j))
        sh, sl = dd_add(sh, sl, th, tl)
        if abs(th) < 1e-36 * abs(sh):
            break
    # expm1(2r) = 2 expm1(r) + expm1(r)^2
    for _ in range(9):
        qh, ql = dd_sqr(sh, sl)
        sh, sl = dd_add(2.0 * sh, 2.0 * sl, qh, ql)
    sh, sl = dd_add_d(sh, sl, 1.0)
    scale = 2.0 ** k
    return sh * scale, sl * scale


@_jit
def _odd_double_factorial_series(th, tl):
    """sum_k t^(2k+1)/(2k+1)!!  =  exp(t^2/2) * int_0^t exp(-s^2/2) ds."""
    t2h, t2l = dd_sqr(th, tl)
    termh, terml = th, tl
    sh, sl = th, tl
    k = 1
    while k < 400:
        termh, terml = dd_mul(termh, terml, t2h, t2l)
        termh, terml = dd_div_d(termh, terml, float(2 * k + 1))
        sh, sl = dd_add(sh, sl, termh, terml)
        if abs(termh) < 1e-36 * abs(sh):
            break
        k += 1
    return sh, sl


@_jit
def _mills_cf(th, tl):
    """Mills ratio Q(t)/g(t) for t >= the seam, by a backward continued fraction."""
    nterms = int((39.2 / th) ** 2) + 40
    fh, fl = th, tl
    for k in range(nterms, 0, -1):
        qh, ql = dd_div(float(k), 0.0, fh, fl)
        fh, fl = dd_add(th, tl, qh, ql)
    return dd_div(1.0, 0.0, fh, fl)


@_jit
def dd_mills_h(xh, xl):
    """H(x) = G(x)/g(x), the ratio of the standard normal cdf to its pdf."""
    if xh <= 0.0:
        th, tl = -xh, -xl
        if th > SERIES_CF_SEAM:
            return _mills_cf(th, tl)
        hh, hl = dd_sqr(th, tl)
        eh, el = dd_exp(0.5 * hh, 0.5 * hl)
        eh, el = dd_mul(eh, el, SQRT_PI_2_HI, SQRT_PI_2_LO)
        fh, fl = _odd_double_factorial_series(th, tl)
        return dd_sub(eh, el, fh, fl)
    # H(x) = 1/g(x) - H(-x)
    hh, hl = dd_sqr(xh, xl)
    eh, el = dd_exp(0.5 * hh, 0.5 * hl)
    eh, el = dd_mul(eh, el, SQRT_2PI_HI, SQRT_2PI_LO)
    mh, ml = dd_mills_h(-xh, -xl)
    return dd_sub(eh, el, mh, ml)


@_jit
def dd_normal_pdf(xh, xl):
    hh, hl = dd_sqr(xh, xl)
    eh, el = dd_exp(-0.5 * hh, -0.5 * hl)
    return dd_div(eh, el, SQRT_2PI_HI, SQRT_2PI_LO)


@_jit
def dd_normal_cdf(xh, xl):
    if xh <= 0.0:
        gh, gl = dd_normal_pdf(xh, xl)
        hh, hl = dd_mills_h(xh, xl)
        return dd_mul(gh, gl, hh, hl)
    gh, gl = dd_normal_pdf(xh, xl)
    hh, hl = dd_mills_h(-xh, -xl)
    qh, ql = dd_mul(gh, gl, hh, hl)
    return dd_sub(1.0, 0.0, qh, ql)


# ---------------------------------------------------------------------------
# Python-level scalar


def _split_int(n: int) -> tuple[float, float]:
    hi = float(n)
    return hi, float(n - int(hi))


def _split_fraction(q: Fraction) -> tuple[float, float]:
    hi = float(q)
    return hi, float(q - Fraction(hi))


class ExtReal:
    """Immutable double-double real.

    Arithmetic with ``int``, ``float`` and :class:`fractions.Fraction`
    operands converts them first (integers and fractions to nearest
    double-double, floats exactly).
    """

    __slots__ = ("hi", "lo")

    def __init__(self, hi: float = 0.0, lo: float = 0.0):
        hi, lo = float(hi), float(lo)
        if lo:
            s = hi + lo
            lo = lo - (s - hi)
            hi = s
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "lo", lo)

    def __setattr__(self, name, value):
        raise AttributeError("ExtReal is immutable")

    @classmethod
    def of(cls, x) -> "ExtReal":
        if isinstance(x, ExtReal):
            return x
        if isinstance(x, bool):
            return cls(float(x))
        if isinstance(x, int):
            return cls(*_split_int(x))
        if isinstance(x, float):
            return cls(x)
        if isinstance(x, Fraction):
            return cls(*_split_fraction(x))
        if isinstance(x, (str, Decimal)):
            return cls(*_split_fraction(Fraction(Decimal(x))))
        raise TypeError(f"cannot convert {type(x).__name__} to ExtReal")

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        try:
            o = ExtReal.of(other)
        except TypeError:
            return NotImplemented
        return ExtReal(*dd_add(self.hi, self.lo, o.hi, o.lo))

    __radd__ = __add__

    def __sub__(self, other):
        try:
            o = ExtReal.of(other)
        except TypeError:
            return NotImplemented
        return ExtReal(*dd_sub(self.hi, self.lo, o.hi, o.lo))

    def __rsub__(self, other):
        return ExtReal.of(other) - self

    def __mul__(self, other):
        try:
            o = ExtReal.of(other)
        except TypeError:
            return NotImplemented
        return ExtReal(*dd_mul(self.hi, self.lo, o.hi, o.lo))

    __rmul__ = __mul__

    def __truediv__(self, other):
        try:
            o = ExtReal.of(other)
        except TypeError:
            return NotImplemented
        if o.hi == 0.0:
            raise DomainError("division by zero")
        return ExtReal(*dd_div(self.hi, self.lo, o.hi, o.lo))

    def __rtruediv__(self, other):
        return ExtReal.of(other) / self

    def __neg__(self):
        return ExtReal(-self.hi, -self.lo)

    def __pos__(self):
        return self

    def __abs__(self):
        return -self if self.hi < 0.0 else self

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return 1 / (self ** -k)
        result, base = ExtReal(1.0), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def sqrt(self) -> "ExtReal":
        return sqrt_ext(self)

    # comparison -------------------------------------------------------------
    def _cmp(self, other) -> int:
        o = ExtReal.of(other)
        d = self - o
        return (d.hi > 0.0) - (d.hi < 0.0)

    def __eq__(self, other):
        try:
            return self._cmp(other) == 0
        except TypeError:
            return NotImplemented

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        return hash((self.hi, self.lo))

    # conversion -------------------------------------------------------------
    def __float__(self):
        return self.hi + self.lo

    def __int__(self):
        return int(self.to_fraction())

    def __floor__(self):
        return math.floor(self.to_fraction())

    def __bool__(self):
        return self.hi != 0.0

    def to_fraction(self) -> Fraction:
        return Fraction(self.hi) + Fraction(self.lo)

    def to_decimal(self, digits: int = 32) -> Decimal:
        with localcontext() as ctx:
            ctx.prec = digits
            return +(Decimal(self.hi) + Decimal(self.lo))

    def format(self, digits: int = 32) -> str:
        return format(self.to_decimal(digits), "g") if self.hi else "0"

    def __str__(self):
        return self.format()

    def __repr__(self):
        return f"ExtReal('{self.format()}')"

    def __reduce__(self):
        return (ExtReal, (self.hi, self.lo))


def ext(x) -> ExtReal:
    """Coerce ``x`` to :class:`ExtReal`."""
    return ExtReal.of(x)


def sqrt_ext(a) -> ExtReal:
    a = ExtReal.of(a)
    if a.hi < 0.0:
        raise DomainError("sqrt of negative number")
    return ExtReal(*dd_sqrt(a.hi, a.lo))


EXP_MIN, EXP_MAX = -700.0, 709.0


def exp_ext(x) -> ExtReal:
    x = ExtReal.of(x)
    if not EXP_MIN <= x.hi <= EXP_MAX:
        raise RangeError(f"exp argument {x.hi!r} out of range")
    return ExtReal(*dd_exp(x.hi, x.lo))


def mills_h(x) -> ExtReal:
    """G(x)/g(x) for the standard normal distribution."""
    x = ExtReal.of(x)
    if x.hi > 37.0:
        raise RangeError("G(x)/g(x) overflows for x > 37")
    return ExtReal(*dd_mills_h(x.hi, x.lo))


def normal_cdf_pdf(x) -> tuple[ExtReal, ExtReal]:
    """Standard normal ``(cdf, pdf)`` at ``x``."""
    x = ExtReal.of(x)
    if abs(x.hi) > 37.0:
        raise RangeError("normal pdf underflows for |x| > 37")
    cdf = ExtReal(*dd_normal_cdf(x.hi, x.lo))
    pdf = ExtReal(*dd_normal_pdf(x.hi, x.lo))
    return cdf, pdf


PI = ExtReal(PI_HI, PI_LO)
SQRT_2PI = ExtReal(SQRT_2PI_HI, SQRT_2PI_LO)
