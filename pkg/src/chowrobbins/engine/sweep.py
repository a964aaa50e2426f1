"""Banded backward induction of value intervals from a horizon.

Each row n keeps the states d_lo(n) .. d_hi(n) (step 2), where d_hi sits just
above the Brownian boundary and d_lo = d_hi - 2W.  Children outside the band
read the injected walk bounds: exact ``d/n`` above the boundary, the
[lower, upper] value bounds below it.  V(d, n) is then enclosed by

    [max(d/n, (lo+ + lo-)/2),  max(d/n, (hi+ + hi-)/2)]

and the state is certified Stop when the continuation hi cannot beat d/n, Go
when the continuation lo strictly beats it.
"""

from __future__ import annotations

import logging
import math
import os
import time

import numba
import numpy as np

from ..brownian import AlphaConstant, dd_above_boundary, dd_brownian_value, shepp_alpha
from ..extprec import ExtReal, dd_add, dd_div, dd_lt, dd_max, dd_mul, dd_mul_d, dd_sub
from ..walkbounds import LOWER_BOUND_MIN_TIME, Classification, ValueInterval
from .types import BandRow, BoundaryRecord, CertifierResult, EngineConfig, STRICT_WIDEN

log = logging.getLogger(__name__)

if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
    # try OpenMP before TBB, whose version check only warns and falls back anyway
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]

_jit = numba.njit(cache=True, nogil=True, error_model="numpy")

UNKNOWN, STOP, GO = 0, 1, 2


@_jit
def band_limits(n, w, ah, full_below=0):
    """Stored range (d_lo, d_hi) at time n for band half-width w.

    Rows with n <= full_below keep every state down to -n: there the only
    lower bound available for injection is the trivial max(d/n, 0).
    """
    top = int(math.ceil(ah * math.sqrt(n))) + 1
    if (top - n) % 2 != 0:
        top += 1
    if top > n:
        top = n
    bot = top - 2 * w
    if bot < -n or n <= full_below:
        bot = -n
    return bot, top


@_jit
def inject(d, n, ah, al, omh, oml, pad):
    """Walk-value bounds at (d, n) as (lo_hi, lo_lo, hi_hi, hi_lo)."""
    ph, pl = dd_div(float(d), 0.0, float(n), 0.0)
    if dd_above_boundary(float(d), 0.0, float(n), 0.0, ah, al):
        return ph, pl, ph, pl
    vh, vl = dd_brownian_value(float(d), 0.0, float(n), 0.0, ah, al, omh, oml)
    uh, ul = dd_mul_d(vh, vl, 1.0 + pad)
    if ph > 0.0:
        lh, ll = ph, pl
    else:
        lh, ll = 0.0, 0.0
    if n > LOWER_BOUND_MIN_TIME:
        fh, fl = dd_div(6.0, 0.0, 5.0 * n, 0.0)
        fh, fl = dd_sub(1.0 - pad, 0.0, fh, fl)
        sh, sl = dd_mul(vh, vl, fh, fl)
        lh, ll = dd_max(sh, sl, lh, ll)
    return lh, ll, uh, ul


@_jit
def _combine(ulh, ull, uhh, uhl, dlh, dll, dhh, dhl, d, rnh, rnl, eps, strict):
    # (rnh, rnl) is 1/n in double-double
    clh, cll = dd_add(ulh, ull, dlh, dll)
    clh, cll = 0.5 * clh, 0.5 * cll
    chh, chl = dd_add(uhh, uhl, dhh, dhl)
    chh, chl = 0.5 * chh, 0.5 * chl
    ph, pl = dd_mul_d(rnh, rnl, float(d))
    if strict:
        # outward widening covers the rounding of the adds and of d/n
        clh, cll = dd_mul_d(clh, cll, 1.0 - STRICT_WIDEN)
        chh, chl = dd_mul_d(chh, chl, 1.0 + STRICT_WIDEN)
        up = 1.0 + STRICT_WIDEN if ph > 0.0 else 1.0 - STRICT_WIDEN
        dn = 1.0 - STRICT_WIDEN if ph > 0.0 else 1.0 + STRICT_WIDEN
        pdh, pdl = dd_mul_d(ph, pl, dn)
        puh, pul = dd_mul_d(ph, pl, up)
    else:
        pdh, pdl = ph, pl
        puh, pul = ph, pl
    # Stop: cont_hi + eps <= d/n.  Go: cont_lo > d/n + eps.
    th, tl = dd_add(chh, chl, eps, 0.0)
    gh, gl = dd_add(puh, pul, eps, 0.0)
    if not dd_lt(pdh, pdl, th, tl):
        code = STOP
    elif dd_lt(gh, gl, clh, cll):
        code = GO
    else:
        code = UNKNOWN
    nlh, nll = dd_max(ph, pl, clh, cll)
    nhh, nhl = dd_max(ph, pl, chh, chl)
    viol = 0
    if dd_lt(nhh, nhl, nlh, nll) or nlh < 0.0:
        viol = 1
    # decision margins: payoff over best continuation, worst continuation over payoff
    stop_m = dd_sub(ph, pl, chh, chl)[0]
    go_m = dd_sub(clh, cll, ph, pl)[0]
    return nlh, nll, nhh, nhl, code, viol, stop_m, go_m


@_jit
def _gather_children(n, dlo, count, dlo1, dhi1, row_lh, row_ll, row_hh, row_hl,
                     buf, ah, al, omh, oml, pad):
    """Fill buf[:, k] with V-bounds at (dlo - 1 + 2k, n + 1), k = 0..count.

    Returns the number of children above the band that were not above the
    boundary (a band-logic error; expected 0).
    """
    err = 0
    for k in range(count + 1):
        d = dlo - 1 + 2 * k
        if dlo1 <= d <= dhi1:
            j = (d - dlo1) >> 1
            buf[0, k] = row_lh[j]
            buf[1, k] = row_ll[j]
            buf[2, k] = row_hh[j]
            buf[3, k] = row_hl[j]
        else:
            if d > dhi1 and not dd_above_boundary(float(d), 0.0, float(n + 1), 0.0, ah, al):
                err += 1
            a, b, c, e = inject(d, n + 1, ah, al, omh, oml, pad)
            buf[0, k] = a
            buf[1, k] = b
            buf[2, k] = c
            buf[3, k] = e
    return err


def _sweep_impl(horizon, w, full_below, d_max, ah, al, omh, oml, pad, eps_coef, strict, report_d, report_n):
    size = w + 1
    if full_below >= horizon:
        full_below = horizon - 1
    top_full = band_limits(full_below, w, ah, full_below)[1]
    if (top_full + full_below) // 2 + 1 > size:
        size = (top_full + full_below) // 2 + 1
    lh = np.zeros((2, size))
    ll = np.zeros((2, size))
    hh = np.zeros((2, size))
    hl = np.zeros((2, size))
    codes = np.zeros(size, dtype=np.int8)
    buf = np.zeros((4, size + 1))
    smarg = np.zeros(size)
    gmarg = np.zeros(size)
    margins = np.full((4, d_max + 1), np.nan)
    n1 = np.full(d_max + 1, -1, dtype=np.int64)
    n2 = np.full(d_max + 1, -1, dtype=np.int64)
    broken = np.zeros(d_max + 1, dtype=np.bool_)
    report = np.full((report_n + 1, 2 * report_d + 1), -1, dtype=np.int8)
    viol_total = 0
    err_total = 0
    mono_total = 0

    cur = horizon % 2
    dlo1, dhi1 = band_limits(horizon, w, ah, full_below)
    for i in range((dhi1 - dlo1) // 2 + 1):
        d = dlo1 + 2 * i
        a, b, c, e = inject(d, horizon, ah, al, omh, oml, pad)
        lh[cur, i] = a
        ll[cur, i] = b
        hh[cur, i] = c
        hl[cur, i] = e

    for n in range(horizon - 1, 0, -1):
        prev = cur
        cur = 1 - cur
        dlo, dhi = band_limits(n, w, ah, full_below)
        count = (dhi - dlo) // 2 + 1
        eps = eps_coef / math.sqrt(n)
        rnh, rnl = dd_div(1.0, 0.0, float(n), 0.0)
        err_total += _gather_children(n, dlo, count, dlo1, dhi1, lh[prev], ll[prev],
                                      hh[prev], hl[prev], buf, ah, al, omh, oml, pad)
        viol_row = 0
        for i in numba.prange(count):
            a, b, c, e, code, v, sm, gm = _combine(
                buf[0, i + 1], buf[1, i + 1], buf[2, i + 1], buf[3, i + 1],
                buf[0, i], buf[1, i], buf[2, i], buf[3, i],
                dlo + 2 * i, rnh, rnl, eps, strict)
            lh[cur, i] = a
            ll[cur, i] = b
            hh[cur, i] = c
            hl[cur, i] = e
            codes[i] = code
            smarg[i] = sm
            gmarg[i] = gm
            viol_row += v
        viol_total += viol_row
        for i in range(count):
            d = dlo + 2 * i
            code = codes[i]
            if n <= report_n and -report_d <= d <= report_d:
                report[n, d + report_d] = code
            if d < 1 or d > d_max:
                continue
            if code == STOP:
                if n1[d] < 0:
                    n1[d] = n
                    margins[0, d] = smarg[i]
                    margins[3, d] = -(smarg[i] + gmarg[i])
            elif n1[d] >= 0:
                mono_total += 1
            if not broken[d]:
                if code == GO:
                    n2[d] = n
                    margins[1, d] = gmarg[i]
                else:
                    broken[d] = True
                    if code == UNKNOWN:
                        margins[2, d] = -(smarg[i] + gmarg[i])
        dlo1, dhi1 = dlo, dhi

    # V(0, 0) averages the two stored states at n = 1
    s_lh, s_ll, s_hh, s_hl = 0.0, 0.0, 0.0, 0.0
    for i in range((dhi1 - dlo1) // 2 + 1):
        s_lh, s_ll = dd_add(s_lh, s_ll, lh[cur, i], ll[cur, i])
        s_hh, s_hl = dd_add(s_hh, s_hl, hh[cur, i], hl[cur, i])
    start = np.array([0.5 * s_lh, 0.5 * s_ll, 0.5 * s_hh, 0.5 * s_hl])
    counters = np.array([viol_total, err_total, mono_total], dtype=np.int64)
    return n1, n2, start, counters, report, margins


_sweep_serial = numba.njit(cache=True, nogil=True, error_model="numpy")(_sweep_impl)
_sweep_parallel = numba.njit(cache=True, nogil=True, error_model="numpy", parallel=True)(_sweep_impl)


def run_certifier(cfg: EngineConfig, alpha: AlphaConstant | None = None) -> CertifierResult:
    """One backward sweep from ``cfg.horizon`` down to n = 1."""
    a = shepp_alpha() if alpha is None else alpha
    ah, al, omh, oml = a.pair
    t0 = time.perf_counter()
    args = (int(cfg.horizon), int(cfg.band_below), int(cfg.full_below), int(cfg.d_max), ah, al, omh, oml,
            float(cfg.inject_pad), float(cfg.slack_coefficient), bool(cfg.strict),
            int(cfg.report_d), int(cfg.report_n))
    log.info("sweep: horizon=%d W=%d d_max=%d threads=%d",
             cfg.horizon, cfg.band_below, cfg.d_max, cfg.threads)
    if cfg.threads > 1:
        prev_threads = numba.get_num_threads()
        numba.set_num_threads(min(cfg.threads, numba.config.NUMBA_NUM_THREADS))
        try:
            n1, n2, start, counters, report, margins = _sweep_parallel(*args)
        finally:
            numba.set_num_threads(prev_threads)
    else:
        n1, n2, start, counters, report, margins = _sweep_serial(*args)
    elapsed = time.perf_counter() - t0
    records = [BoundaryRecord(d, int(n1[d]), int(n2[d])) for d in range(1, cfg.d_max + 1)]
    interval = ValueInterval(ExtReal(start[0], start[1]), ExtReal(start[2], start[3]))
    log.info("sweep done in %.1fs: %d/%d settled", elapsed,
             sum(r.settled for r in records), len(records))
    return CertifierResult(
        config=cfg,
        records=records,
        start=interval,
        violations=int(counters[0]),
        band_errors=int(counters[1]),
        monotone_breaks=int(counters[2]),
        elapsed=elapsed,
        report=report if cfg.report_n > 0 else None,
        margins=margins,
    )


# ---------------------------------------------------------------------------
# single-row entry points (same kernels as the sweep)


def inject_bounds(d: int, n: int, alpha: AlphaConstant | None = None,
                  pad: float = 0.0) -> ValueInterval:
    """Certified [lower, upper] walk-value bounds used at the horizon and band edges."""
    a = shepp_alpha() if alpha is None else alpha
    lh, ll, hh, hl = inject(int(d), int(n), *a.pair, float(pad))
    return ValueInterval(ExtReal(lh, ll), ExtReal(hh, hl))


def horizon_row(n: int, w: int, alpha: AlphaConstant | None = None, pad: float = 0.0) -> BandRow:
    a = shepp_alpha() if alpha is None else alpha
    dlo, dhi = band_limits(n, w, a.alpha.hi)
    rows = [inject(d, n, *a.pair, pad) for d in range(dlo, dhi + 1, 2)]
    arr = np.array(rows, dtype=np.float64).reshape(-1, 4)
    return BandRow(n, dlo, dhi, arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy(), arr[:, 3].copy())


def _row_step(row: BandRow, w: int, alpha: AlphaConstant, eps: float, strict: bool, pad: float):
    n = row.n - 1
    if n < 1:
        raise ValueError("cannot step back past n = 1")
    dlo, dhi = band_limits(n, w, alpha.alpha.hi)
    count = (dhi - dlo) // 2 + 1
    buf = _children(row, n, dlo, count, alpha, pad)
    rnh, rnl = dd_div(1.0, 0.0, float(n), 0.0)
    out = np.zeros((4, count))
    codes = []
    for i, d in enumerate(range(dlo, dhi + 1, 2)):
        a, b, c, e, code, *_ = _combine(*buf[:, i + 1], *buf[:, i], d, rnh, rnl, eps, strict)
        out[:, i] = (a, b, c, e)
        codes.append(Classification(code))
    return BandRow(n, dlo, dhi, out[0], out[1], out[2], out[3]), codes


def _children(row: BandRow, n: int, dlo: int, count: int, alpha: AlphaConstant, pad: float):
    buf = np.zeros((4, count + 1))
    err = _gather_children(n, dlo, count, row.d_lo, row.d_hi, row.lo_hi, row.lo_lo,
                           row.hi_hi, row.hi_lo, buf, *alpha.pair, pad)
    if err:
        raise RuntimeError(f"band logic error: a child of row {n} is missing")
    return buf


def step_back(row: BandRow, w: int = 64, alpha: AlphaConstant | None = None,
              pad: float = 0.0, strict: bool = False) -> BandRow:
    """Intervals at time ``row.n - 1`` from the stored row (band half-width ``w``)."""
    a = shepp_alpha() if alpha is None else alpha
    return _row_step(row, w, a, 0.0, strict, pad)[0]


def classify(d: int, n: int, row: BandRow, eps: float = 0.0,
             alpha: AlphaConstant | None = None, pad: float = 0.0,
             strict: bool = False) -> Classification:
    """Stop/Go/Unknown at (d, n) from the children held in ``row`` (time n + 1)."""
    if row.n != n + 1:
        raise ValueError("row must hold time n + 1")
    a = shepp_alpha() if alpha is None else alpha
    buf = _children(row, n, int(d), 1, a, pad)
    rnh, rnl = dd_div(1.0, 0.0, float(n), 0.0)
    code = _combine(*buf[:, 1], *buf[:, 0], int(d), rnh, rnl, float(eps), strict)[4]
    return Classification(code)
