"""The eleven acceptance criteria, each at its stated tolerance.

Each test prints one PASS/FAIL line.  The big sweeps are shared through
module-scoped fixtures; the whole file takes about 11 minutes
on one core, most of it the d <= 2000 sweep of criterion 8.
"""

import math
import time

import pytest

from chowrobbins import cli
from chowrobbins.asymptotics import (DEFAULT_ENVELOPE_SLACK, boundary_envelope, cf_mismatches,
                                     delta0, fit_sqrt_coefficient, residual_table,
                                     threshold_coefficient, threshold_in_envelope)
from chowrobbins.brownian import boundary_position, brownian_value, derivative_at_boundary, solve_alpha
from chowrobbins.catalan import (ConsistencyError, catalan_moment_sum, central_weight,
                                 triangle_moment_sum, tree_weights)
from chowrobbins.engine import (EngineConfig, beta_table, boundary_points, compare_rules,
                                exact_oracle, run_certifier, shifted_rule, walk_horizon_bounds)
from chowrobbins.extprec import ext

pytestmark = pytest.mark.slow

SQRT_PI = math.sqrt(math.pi)


@pytest.fixture(scope="module")
def alpha():
    return float(solve_alpha().alpha)


@pytest.fixture(scope="module")
def run_d100():
    return run_certifier(EngineConfig(d_max=100, horizon=10 ** 6))


@pytest.fixture(scope="module")
def run_d280():
    # covers every n <= 1e5 on both parities
    return run_certifier(EngineConfig(d_max=280, horizon=10 ** 6, band_below=1024))


@pytest.fixture(scope="module")
def table_d280(run_d280):
    return beta_table(run_d280.records)


# ---------------------------------------------------------------------------


def test_c01_alpha(verdict):
    t0 = time.perf_counter()
    a = solve_alpha()
    dt = time.perf_counter() - t0
    ok = f"{float(a.alpha):.5f}" == "0.83992" and a.residual <= ext("1e-25") and dt < 1.0
    verdict(1, "alpha", ok, f"alpha={a.alpha.format(20)} residual={float(a.residual):.1e} time={dt:.3f}s")


def test_c02_identities(verdict):
    t0 = time.perf_counter()
    mismatches = 0
    for n in range(1, 501):
        for k in range(3):
            try:
                catalan_moment_sum(k, n)
            except ConsistencyError:
                mismatches += 1
        for k in range(6):
            try:
                triangle_moment_sum(k, n)
            except ConsistencyError:
                mismatches += 1
    for n in range(1, 201):
        w = tree_weights(n)
        mismatches += w.total != 1
        mismatches += sum(w.leaf) != 1 - central_weight(n)
    dt = time.perf_counter() - t0
    verdict(2, "identity suites", mismatches == 0 and dt < 30,
            f"{mismatches} mismatches over 9 families n<=500, tree weights n<=200, {dt:.1f}s")


def test_c03_derivatives(verdict):
    b = ext(10 ** 4)
    u0 = boundary_position(b)
    h = ext("1e-4")
    vals = [brownian_value(u0 - k * h, b) for k in range(6)]
    # second-order one-sided (backward) difference stencils
    stencils = {
        1: [ext(3) / 2, -2, ext(1) / 2],
        2: [2, -5, 4, -1],
        3: [ext(5) / 2, -9, 12, -7, ext(3) / 2],
        4: [3, -14, 26, -24, 11, -2],
    }
    errs = {}
    for n, cs in stencils.items():
        fd = sum((c * v for c, v in zip(cs, vals)), ext(0)) / h ** n
        ref = derivative_at_boundary(n, b)
        errs[n] = abs(float((fd - ref) / ref))
    worst = max(errs.values())
    verdict(3, "boundary derivatives vs finite differences", worst <= 1e-6,
            "rel errors " + " ".join(f"n{n}={e:.1e}" for n, e in errs.items()))


def test_c04_oracle_equivalence(verdict):
    N = 2000
    orc = exact_oracle(10, N, horizon_bounds=walk_horizon_bounds())
    cert = run_certifier(EngineConfig(d_max=10, horizon=N, band_below=64,
                                      report_d=10, report_n=N - 1))
    contradictions = agree = 0
    for n in range(1, N):
        for d in range(-10, 11):
            a = cert.report_code(d, n)
            b = orc.code(d, n)
            if a > 0 and b > 0:
                agree += 1
                contradictions += a != b
    settled = [r for r in cert.records if r.settled]
    same_records = all(orc.records()[r.d - 1] == r for r in settled)
    ok = contradictions == 0 and same_records and len(settled) == 10
    verdict(4, "exact oracle vs certifier", ok,
            f"horizon {N}, {agree} jointly certified codes, {contradictions} contradictions, "
            f"{len(settled)}/10 records settled and identical")


def test_c05_boundary_d100(verdict, run_d100):
    r = run_d100
    settled = sum(x.settled for x in r.records)
    ok = settled == 100 and r.elapsed < 600 and r.violations == 0 and r.band_errors == 0
    verdict(5, "boundary reproduction d<=100, N=1e6", ok,
            f"{settled}/100 settled (n2=n1+2), sweep {r.elapsed:.1f}s, "
            f"V(0,0) in [{r.start.lo.format(12)}, {r.start.hi.format(12)}]")


def test_c06_cf_formula(verdict, table_d280):
    assert table_d280.n_max >= 10 ** 5
    mm = cf_mismatches(table_d280, 1600, 10 ** 5)
    verdict(6, "closed-form rule on 1600<n<=1e5", len(mm) <= 3,
            f"{len(mm)} exceptions at n={mm}")


def test_c07_distance_window(verdict, run_d280, alpha):
    pts = [(d, n) for d, n in boundary_points(run_d280.records) if n > 1600]
    deltas = [alpha * math.sqrt(n) - d for d, n in pts]
    bad = [(d, n) for (d, n), x in zip(pts, deltas) if not 0.38 < x < 0.81]
    verdict(7, "distance window at boundary points", not bad and len(pts) > 200,
            f"{len(pts)} points n>1600, delta in [{min(deltas):.4f}, {max(deltas):.4f}], "
            f"{len(bad)} outside (0.38, 0.81)")


@pytest.fixture(scope="module")
def run_d2000():
    return run_certifier(EngineConfig(d_max=2000, horizon=12 * 10 ** 6, band_below=1024))


def test_c08_residual_fit(verdict, run_d2000):
    settled = [r for r in run_d2000.records if r.settled]
    fit_pts = residual_table([r for r in settled if 200 <= r.d <= 2000])
    c = float(fit_sqrt_coefficient(fit_pts))
    band = residual_table([r for r in settled if r.d >= 50])
    dev = [float(p.r) + math.sqrt(p.d) / SQRT_PI for p in band]
    unsettled = len(run_d2000.records) - len(settled)
    ok = 0.50 <= c <= 0.63 and max(abs(x) for x in dev) <= 1.5
    verdict(8, "sqrt(d) coefficient on 200<=d<=2000", ok,
            f"c={c:.4f} (1/sqrt(pi)={1 / SQRT_PI:.4f}) from {len(fit_pts)} settled records "
            f"({unsettled} near-tie records unsettled, excluded); residual offsets in "
            f"[{min(dev):.3f}, {max(dev):.3f}]")


def test_c09_envelope(verdict, run_d280, table_d280):
    pts = [(d, n) for d, n in boundary_points(run_d280.records) if 1600 < n <= 10 ** 5]
    outside = 0
    for d, n in pts:
        lo, hi = boundary_envelope(n, DEFAULT_ENVELOPE_SLACK)
        outside += not (lo <= d <= hi)
    inconsistent = sum(not threshold_in_envelope(table_d280[n], n)
                       for n in range(1601, 10 ** 5 + 1))
    b = 10 ** 12
    up = float(threshold_coefficient(b, "upper"))
    low = float(threshold_coefficient(b, "lower"))
    ok = (outside == 0 and inconsistent == 0 and DEFAULT_ENVELOPE_SLACK <= 5
          and abs(up - 0.434) <= 0.00434 and abs(low - 0.074) <= 0.00074
          and delta0(b, "upper") < 0.5 < delta0(b, "lower"))
    verdict(9, "two-sided envelope and quadratic thresholds", ok,
            f"slack={DEFAULT_ENVELOPE_SLACK}, {outside}/{len(pts)} boundary points outside, "
            f"{inconsistent} n with no in-envelope cut-off; at b=1e12 coefficients "
            f"{up:.4f} (0.434) and {low:.5f} (0.074)")


def test_c10_monte_carlo(verdict, run_d280, table_d280):
    trials, seed, max_n = 10 ** 7, 20261014, 10 ** 5
    rules = [table_d280, shifted_rule(table_d280, 1), shifted_rule(table_d280, -1)]
    cmp = compare_rules(rules, trials, seed, max_n=max_n)
    base = cmp.results[0]
    lo = float(run_d280.start.lo) - 3 * base.stderr
    hi = float(run_d280.start.hi) + 3 * base.stderr
    z_up, z_down = cmp.z_score(1), cmp.z_score(2)
    ok = z_up >= 3 and z_down >= 3 and lo <= base.mean <= hi
    verdict(10, "Monte Carlo, 1e7 paired trials", ok,
            f"mean {base.mean:.5f}+-{base.stderr:.5f} vs certified "
            f"[{float(run_d280.start.lo):.9f}, {float(run_d280.start.hi):.9f}]; "
            f"beats +1 level by z={z_up:.0f}, -1 level by z={z_down:.0f}; "
            f"{base.forced_fraction:.3f} of paths reach n={max_n}")


def test_c11_determinism(verdict, run_d100, tmp_path, capsys):
    args = ["certify", "--dmax", "60", "--horizon", "20000"]
    outs = []
    for threads in (1, 2, 4):
        path = tmp_path / f"t{threads}.csv"
        assert cli.main(args + ["--threads", str(threads), "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    capsys.readouterr()
    # the config echo records the thread count; the tables below it must match
    bodies = {o.split(b"\n", 1)[1] for o in outs}
    threads_same = len(bodies) == 1

    rec = cli.main(["certify", "--dmax", "60", "--horizon", "20000", "--out",
                    str(tmp_path / "again.csv")])
    same_again = rec == 0 and (tmp_path / "again.csv").read_bytes() == outs[0]

    table = beta_table(run_d100.records)
    mc = [compare_rules([table], 200_000, 5, threads=t) for t in (1, 3)]
    mc_same = mc[0] == mc[1]

    wide = run_certifier(EngineConfig(d_max=100, horizon=10 ** 6, band_below=512))
    far = run_certifier(EngineConfig(d_max=100, horizon=2 * 10 ** 6))
    base = {r.d: r for r in run_d100.records if r.settled}
    band_same = all(wide.record(d) == r for d, r in base.items()) and wide.all_settled
    horizon_same = all(far.record(d) == r for d, r in base.items()) and far.all_settled
    ok = threads_same and same_again and mc_same and band_same and horizon_same
    verdict(11, "determinism and stability", ok,
            f"threads 1/2/4 tables identical={threads_same}, rerun byte-identical={same_again}, "
            f"MC threads identical={mc_same}, W 256->512 unchanged={band_same}, "
            f"N 1e6->2e6 unchanged={horizon_same}")
