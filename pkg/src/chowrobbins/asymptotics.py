"""Asymptotics of the stop boundary: residuals, the sqrt(d) fit, closed forms.

The certified boundary is compared with ``n_s(d) ~ (d^2 + d)/alpha^2 - c sqrt(d)``
(expected c = 1/sqrt(pi)), with the closed integer rule
``floor(alpha sqrt(n) - 1/2 + 1/(7.9 + 4.5 n^(1/4)))`` of Christensen and
Fischer, and with the two-sided envelope ``alpha sqrt(n) - 1/2 + O(n^(-1/4))``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import mpmath

from .brownian import AlphaConstant, shepp_alpha
from .engine.tables import BetaTable
from .engine.types import BoundaryRecord
from .extprec import DomainError, ExtReal, ext, sqrt_ext

SQRT_PI = sqrt_ext(ext("3.14159265358979323846264338327950288"))
UPPER_COEFF = ext("0.43")  # n^(-1/4) coefficient (over sqrt(pi)) of the upper envelope
LOWER_COEFF = ext("0.074")
# slack on the n^(-1/2) term of the envelope, fitted once on the d <= 280 table
DEFAULT_ENVELOPE_SLACK = 0.5


@dataclass(frozen=True)
class ResidualPoint:
    d: int
    ns: int
    r: ExtReal  # ns - (d^2 + d)/alpha^2


def quadratic_term(d: int, alpha: AlphaConstant | None = None) -> ExtReal:
    a = shepp_alpha() if alpha is None else alpha
    return ext(d * d + d) / (a.alpha * a.alpha)


def residual_table(records: Iterable[BoundaryRecord],
                   alpha: AlphaConstant | None = None) -> list[ResidualPoint]:
    out = []
    for rec in records:
        if not rec.settled:
            raise ValueError(f"record d={rec.d} is not settled")
        out.append(ResidualPoint(rec.d, rec.ns, rec.ns - quadratic_term(rec.d, alpha)))
    return out


def fit_sqrt_coefficient(points: Sequence[ResidualPoint], min_points: int = 50) -> ExtReal:
    """Least squares of r(d) on -c sqrt(d): c = -sum(r sqrt d) / sum(d)."""
    if not points:
        raise ValueError("no residual points")
    if len(points) < min_points:
        raise ValueError(f"need at least {min_points} points, got {len(points)}")
    num = ext(0)
    den = 0
    for p in points:
        num = num + p.r * sqrt_ext(p.d)
        den += p.d
    return -num / den


# ---------------------------------------------------------------------------
# closed-form boundary of Christensen and Fischer


def cf_formula(n: int, alpha: AlphaConstant | None = None) -> int:
    """floor(alpha sqrt(n) - 1/2 + 1/(7.9 + 4.5 n^(1/4)))."""
    if n < 1:
        raise DomainError("n must be at least 1")
    a = shepp_alpha() if alpha is None else alpha
    root = sqrt_ext(n)
    x = a.alpha * root - ext("0.5") + 1 / (ext("7.9") + ext("4.5") * sqrt_ext(root))
    return math.floor(x)


def cf_beta(n: int, alpha: AlphaConstant | None = None) -> int:
    """First reachable stopping height at time n if one stops exactly when d exceeds the floor."""
    k = cf_formula(n, alpha) + 1
    return k if (k - n) % 2 == 0 else k + 1


def cf_mismatches(table: BetaTable, n_lo: int, n_hi: int,
                                   alpha: AlphaConstant | None = None) -> list[int]:
    """The n in (n_lo, n_hi] where the certified rule differs from the closed form."""
    return [n for n in range(n_lo + 1, n_hi + 1)
            if table[n] != cf_beta(n, alpha)]


# ---------------------------------------------------------------------------
# quadratic thresholds for the distance below the Brownian boundary


class Mode(str, enum.Enum):
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class QuadraticThreshold:
    n: int
    b: ExtReal
    A: ExtReal
    B1: ExtReal
    B: ExtReal
    C1: ExtReal
    C: ExtReal
    delta: ExtReal


def central_weight_ext(n: int) -> ExtReal:
    """binom(2n, n)/4^n to double-double accuracy via a gamma ratio (n may be large)."""
    with mpmath.workdps(45):
        g = mpmath.gamma(n + mpmath.mpf(1) / 2) / (mpmath.sqrt(mpmath.pi) * mpmath.gamma(n + 1))
        return ext(mpmath.nstr(g, 40, strip_zeros=False))


def _decimal(x) -> ExtReal:
    # 1.9 means the decimal 1.9, not the nearest double
    return ext(repr(x)) if isinstance(x, float) else ext(x)


def quadratic_threshold(b, mode: Mode | str = Mode.UPPER, c: float = 1.9,
                        alpha: AlphaConstant | None = None) -> QuadraticThreshold:
    """Positive root of A q^2 + B q + C = 0: tree-depth analysis at time b.

    Upper mode takes depth n = floor((alpha/2) sqrt(b)); lower mode n = floor(c sqrt(b)).
    """
    mode = Mode(mode)
    b = ext(b)
    if b <= 1600:
        raise DomainError("b must exceed 1600")
    a = shepp_alpha() if alpha is None else alpha
    al = a.alpha
    sb = sqrt_ext(b)
    if mode is Mode.UPPER:
        n = math.floor(al * sb / 2)
    else:
        n = math.floor(_decimal(c) * sb)
    g = central_weight_ext(n)
    ratio = al * n / sb
    sq = ratio * ratio / 3
    b1 = 1 + ratio
    bq = 2 * (1 - b1 * g)
    if mode is Mode.UPPER:
        c1 = 1 + 2 * ratio - sq
        cq = -(1 - c1 * g)
    else:
        c1 = ext("0.2") - 2 * ratio + sq
        cq = -(1 + c1 * g)
    disc = bq * bq - 4 * g * cq
    if disc.hi < 0:
        raise ArithmeticError("negative discriminant")
    delta = (-bq + sqrt_ext(disc)) / (2 * g)
    return QuadraticThreshold(n, b, g, b1, bq, c1, cq, delta)


def delta0(b, mode: Mode | str = Mode.UPPER, c: float = 1.9,
           alpha: AlphaConstant | None = None) -> ExtReal:
    return quadratic_threshold(b, mode, c, alpha).delta


def threshold_coefficient(b, mode: Mode | str = Mode.UPPER, c: float = 1.9) -> ExtReal:
    """|delta0 - 1/2| * b^(1/4) * sqrt(pi): the n^(-1/4) coefficient the threshold implies."""
    d = delta0(b, mode, c)
    return abs(d - ext("0.5")) * sqrt_ext(sqrt_ext(b)) * SQRT_PI


def lower_depth_objective(c: float, alpha: AlphaConstant | None = None) -> ExtReal:
    """(0.95 - alpha c + alpha^2 c^2/3)/sqrt(c), minimized by the lower-mode depth factor."""
    a = (shepp_alpha() if alpha is None else alpha).alpha
    c = _decimal(c)
    return (ext("0.95") - a * c + a * a * c * c / 3) / sqrt_ext(c)


# ---------------------------------------------------------------------------
# two-sided envelope for beta_n


def boundary_envelope(n: int, slack=DEFAULT_ENVELOPE_SLACK,
                      alpha: AlphaConstant | None = None) -> tuple[ExtReal, ExtReal]:
    """alpha sqrt(n) - 1/2 - (0.074/sqrt(pi)) n^(-1/4) - s/sqrt(n) up to the +0.43 side."""
    if n <= 1600:
        raise DomainError("n must exceed 1600")
    a = shepp_alpha() if alpha is None else alpha
    root = sqrt_ext(n)
    quarter = 1 / sqrt_ext(root)
    centre = a.alpha * root - ext("0.5")
    extra = ext(slack) / root
    lo = centre - LOWER_COEFF / SQRT_PI * quarter - extra
    hi = centre + UPPER_COEFF / SQRT_PI * quarter + extra
    return lo, hi


def threshold_in_envelope(beta: int, n: int, slack=DEFAULT_ENVELOPE_SLACK,
                          alpha: AlphaConstant | None = None) -> bool:
    """Whether a real cut-off t (stop iff d >= t) consistent with beta_n lies in the envelope.

    Only heights of n's parity are reachable, so that cut-off can be anywhere in (beta - 2, beta].
    """
    lo, hi = boundary_envelope(n, slack, alpha)
    return beta - 2 < hi and lo <= beta


def envelope_slack_needed(points: Iterable[tuple[int, int]],
                          alpha: AlphaConstant | None = None) -> float:
    """Smallest slack putting every boundary point (d, n) inside the envelope at n."""
    worst = 0.0
    for d, n in points:
        lo, hi = boundary_envelope(n, 0, alpha)
        root = math.sqrt(n)
        worst = max(worst, float(lo - d) * root, float(d - hi) * root)
    return worst


def speculation_offset(d: int, n: int, alpha: AlphaConstant | None = None) -> ExtReal:
    """(d - alpha sqrt(n) + 1/2) n^(1/4); expected near alpha^(3/2)/(2 sqrt(pi)) on the boundary."""
    a = shepp_alpha() if alpha is None else alpha
    root = sqrt_ext(n)
    return (d - a.alpha * root + ext("0.5")) * sqrt_ext(root)
