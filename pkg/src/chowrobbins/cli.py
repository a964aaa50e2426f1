"""Command-line front end.

Every flag can also be set through an environment variable named
``CHOWROBBINS_<FLAG>`` (upper case, dashes as underscores); explicit flags win.
Tables are written as CSV preceded by ``#`` lines echoing the configuration,
scalars as JSON on stdout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from typing import Sequence

from . import asymptotics
from .brownian import solve_alpha
from .catalan import ConsistencyError, verify_identities
from .engine import (
    BoundaryRecord,
    ConfigError,
    EngineConfig,
    IncompleteCertification,
    beta_table,
    boundary_points,
    compare_rules,
    exact_oracle,
    run_certifier,
    shifted_rule,
    walk_horizon_bounds,
)
from .engine.oracle import MAX_HEIGHT, MAX_HORIZON, crude_horizon_bounds
from .extprec import ext, sqrt_ext
from .walkbounds import one_step_classify, value_bounds

log = logging.getLogger("chowrobbins")

EXIT_USAGE = 2
EXIT_CONSISTENCY = 3
ENV_PREFIX = "CHOWROBBINS_"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output helpers


def _emit_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _csv_text(echo: dict, header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(echo, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _write_table(path: str | None, echo: dict, header, rows) -> None:
    text = _csv_text(echo, header, rows)
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _record_rows(records):
    for r in records:
        yield r.d, r.n1, r.n2, int(r.settled), "" if r.ns is None else r.ns


def read_records(path: str) -> list[BoundaryRecord]:
    """Load a ``d,n1,n2,settled,ns`` table written by ``certify``."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or not {"d", "n1", "n2"} <= set(reader.fieldnames):
        raise UsageError(f"{path} is not a boundary table")
    return [BoundaryRecord(int(r["d"]), int(r["n1"]), int(r["n2"])) for r in reader]


def _ext_str(x, digits: int = 32) -> str:
    return x.format(digits)


# ---------------------------------------------------------------------------
# commands


def cmd_alpha(args) -> int:
    a = solve_alpha()
    _emit_json({
        "alpha": a.alpha.format(args.digits),
        "one_minus_alpha_sq": a.one_minus_alpha_sq.format(args.digits),
        "residual": f"{float(a.residual):.3e}",
    })
    return 0


def cmd_value(args) -> int:
    d, n = args.d, args.n
    if n < 1 or abs(d) > n or (d - n) % 2:
        raise UsageError(f"(d={d}, n={n}) is not a reachable position")
    iv = value_bounds(d, n)
    _emit_json({
        "d": d,
        "n": n,
        "lo": _ext_str(iv.lo),
        "hi": _ext_str(iv.hi),
        "stop_payoff": _ext_str(ext(d) / n),
        "classification": str(one_step_classify(d, n)),
    })
    return 0


def _engine_config(args) -> EngineConfig:
    return EngineConfig(
        d_max=args.dmax,
        horizon=args.horizon,
        band_below=args.band_below,
        full_below=args.full_below,
        precision_mode=args.precision,
        slack=args.slack,
        threads=args.threads,
    )


def cmd_certify(args) -> int:
    cfg = _engine_config(args)
    res = run_certifier(cfg)
    echo = {"command": "certify", **cfg.echo()}
    _write_table(args.out, echo, ["d", "n1", "n2", "settled", "ns"], _record_rows(res.records))
    if args.beta_out:
        table = beta_table(res.records)
        a = float(solve_alpha().alpha)
        rows = ((n, b, repr(a * (n ** 0.5) - b)) for n, b in table.items())
        _write_table(args.beta_out, {**echo, "table": "beta"}, ["n", "beta", "delta"], rows)
    summary = {
        "settled": sum(r.settled for r in res.records),
        "records": len(res.records),
        "start_lo": _ext_str(res.start.lo),
        "start_hi": _ext_str(res.start.hi),
        "violations": res.violations,
        "band_errors": res.band_errors,
        "monotone_breaks": res.monotone_breaks,
    }
    print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    if res.violations or res.band_errors or res.monotone_breaks:
        log.error("internal consistency failure: %s", summary)
        return EXIT_CONSISTENCY
    if args.require_settled and not res.all_settled:
        log.error("%d records unsettled", len(res.records) - summary["settled"])
        return EXIT_CONSISTENCY
    return 0


def cmd_oracle(args) -> int:
    if not 1 <= args.dmax <= MAX_HEIGHT or not 2 <= args.horizon <= MAX_HORIZON:
        raise UsageError(f"oracle needs dmax <= {MAX_HEIGHT} and horizon <= {MAX_HORIZON}")
    bounds = crude_horizon_bounds if args.bounds == "crude" else walk_horizon_bounds()
    res = exact_oracle(args.dmax, args.horizon, horizon_bounds=bounds)
    echo = {"command": "oracle", "d_max": args.dmax, "horizon": args.horizon, "bounds": args.bounds}
    _write_table(args.out, echo, ["d", "n1", "n2", "settled", "ns"], _record_rows(res.records()))
    lo, hi = res.start
    print(json.dumps({"start_lo": f"{lo.numerator / lo.denominator!r}",
                      "start_hi": f"{hi.numerator / hi.denominator!r}"}), file=sys.stderr)
    return 0


def cmd_identities(args) -> int:
    try:
        counts = verify_identities(args.nmax)
    except ConsistencyError as exc:
        print(f"identity mismatch: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    print(" ".join(f"{k}:{v}" for k, v in counts.items()) + " ok")
    return 0


def cmd_fit(args) -> int:
    records = [r for r in read_records(args.records) if args.dmin <= r.d <= args.dmax]
    settled = [r for r in records if r.settled]
    points = asymptotics.residual_table(settled)
    try:
        c = asymptotics.fit_sqrt_coefficient(points)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.out:
        echo = {"command": "fit", "records": os.path.basename(args.records),
                "d_min": args.dmin, "d_max": args.dmax}
        rows = ((p.d, p.ns, p.r.format(20)) for p in points)
        _write_table(args.out, echo, ["d", "ns", "residual"], rows)
    target = 1 / sqrt_ext(ext("3.14159265358979323846264338327950288"))
    _emit_json({
        "coefficient": c.format(20),
        "target": target.format(20),
        "points": len(points),
        "unsettled_skipped": len(records) - len(settled),
    })
    return 0


def cmd_envelope(args) -> int:
    records = read_records(args.records)
    try:
        table = beta_table(records)
    except IncompleteCertification as exc:
        print(f"incomplete certification: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    n_hi = min(args.nmax, table.n_max)
    n_lo = args.nmin
    pts = [(d, n) for d, n in boundary_points(records) if n_lo < n <= n_hi]
    outside = 0
    for d, n in pts:
        lo, hi = asymptotics.boundary_envelope(n, args.slack)
        outside += not (lo <= d <= hi)
    upper = asymptotics.quadratic_threshold(args.b, "upper")
    lower = asymptotics.quadratic_threshold(args.b, "lower")
    _emit_json({
        "n_range": [n_lo, n_hi],
        "boundary_points": len(pts),
        "outside_envelope": outside,
        "slack": args.slack,
        "slack_needed": asymptotics.envelope_slack_needed(pts),
        "cf_mismatches": asymptotics.cf_mismatches(table, n_lo, n_hi),
        "b": args.b,
        "delta_upper": upper.delta.format(20),
        "delta_lower": lower.delta.format(20),
        "upper_coefficient": asymptotics.threshold_coefficient(args.b, "upper").format(10),
        "lower_coefficient": asymptotics.threshold_coefficient(args.b, "lower").format(10),
    })
    if args.out:
        a = float(solve_alpha().alpha)
        echo = {"command": "envelope", "records": os.path.basename(args.records)}
        rows = ((n, table[n], repr(a * n ** 0.5 - table[n])) for n in range(1, n_hi + 1))
        _write_table(args.out, echo, ["n", "beta", "delta"], rows)
    return 0


def cmd_simulate(args) -> int:
    records = read_records(args.records)
    try:
        table = beta_table(records)
    except IncompleteCertification as exc:
        print(f"incomplete certification: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    if args.trials <= 0:
        raise UsageError("trials must be positive")
    max_n = table.n_max if args.max_n is None else args.max_n
    if max_n > table.n_max:
        raise UsageError(f"the table covers n <= {table.n_max} only")
    rules = [table]
    if args.perturb:
        rules += [shifted_rule(table, 1), shifted_rule(table, -1)]
    cmp = compare_rules(rules, args.trials, args.seed, max_n=max_n, threads=args.threads)
    out = {
        "trials": args.trials,
        "seed": args.seed,
        "max_n": max_n,
        "mean": repr(cmp.results[0].mean),
        "stderr": repr(cmp.results[0].stderr),
        "forced_fraction": repr(cmp.results[0].forced_fraction),
    }
    if args.perturb:
        for name, r in (("plus_one", 1), ("minus_one", 2)):
            out[name] = {
                "mean": repr(cmp.results[r].mean),
                "diff": repr(cmp.diff_mean[r]),
                "diff_stderr": repr(cmp.diff_stderr[r]),
                "z": repr(cmp.z_score(r)),
            }
    _emit_json(out)
    return 0


# ---------------------------------------------------------------------------
# parser


def _engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dmax", type=int, required=True, help="largest height to certify")
    p.add_argument("--horizon", type=int, default=None,
                   help="start row of the sweep (default 2 (d^2+d)/alpha^2)")
    p.add_argument("--band-below", type=int, default=256,
                   help="stored states below the boundary, in reachable levels")
    p.add_argument("--full-below", type=int, default=1600,
                   help="rows n <= this are stored in full")
    p.add_argument("--precision", choices=["extended", "strict"], default="extended")
    p.add_argument("--slack", type=float, default=None,
                   help="classification margin coefficient of 1/sqrt(n)")
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chowrobbins", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("alpha", help="solve for alpha")
    p.add_argument("--digits", type=int, default=30)
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("value", help="certified value interval at one position")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_value)

    p = sub.add_parser("certify", help="run the backward sweep, write the boundary table")
    _engine_flags(p)
    p.add_argument("--out", default="-")
    p.add_argument("--beta-out", default=None, help="also write the n,beta,delta table")
    p.add_argument("--require-settled", action="store_true",
                   help="exit 3 unless every record settles")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("oracle", help="exact-rational induction on a small triangle")
    p.add_argument("--dmax", type=int, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--bounds", choices=["walk", "crude"], default="walk")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("identities", help="exact check of the Catalan and triangle identities")
    p.add_argument("--nmax", type=int, default=60)
    p.set_defaults(func=cmd_identities)

    p = sub.add_parser("fit", help="residuals and the sqrt(d) coefficient")
    p.add_argument("--records", required=True)
    p.add_argument("--dmin", type=int, default=200)
    p.add_argument("--dmax", type=int, default=2000)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("envelope", help="check beta_n against the closed forms")
    p.add_argument("--records", required=True)
    p.add_argument("--nmin", type=int, default=1600)
    p.add_argument("--nmax", type=int, default=100_000)
    p.add_argument("--slack", type=float, default=asymptotics.DEFAULT_ENVELOPE_SLACK)
    p.add_argument("--b", type=float, default=1e12, help="time for the quadratic thresholds")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("simulate", help="Monte Carlo payoff of the certified rule")
    p.add_argument("--records", required=True)
    p.add_argument("--trials", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--max-n", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--perturb", action="store_true", help="also run the rules moved by +-1 level")
    p.set_defaults(func=cmd_simulate)

    for action in sub.choices.values():
        _apply_env(action)
    return parser


def _apply_env(p: argparse.ArgumentParser) -> None:
    """Environment defaults; they also satisfy required flags."""
    for act in p._actions:
        if not act.option_strings or act.dest == "help":
            continue
        raw = os.environ.get(ENV_PREFIX + act.dest.upper())
        if raw is None:
            continue
        if act.nargs == 0:
            value = raw.strip().lower() in ("1", "true", "yes", "on")
        else:
            try:
                value = act.type(raw) if act.type else raw
            except ValueError:
                p.error(f"bad value in ${ENV_PREFIX}{act.dest.upper()}: {raw!r}")
            if act.choices and value not in act.choices:
                p.error(f"${ENV_PREFIX}{act.dest.upper()} must be one of {act.choices}")
        act.default = value
        act.required = False


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        parser.error(str(exc))
    except ConsistencyError as exc:
        print(f"consistency failure: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except IncompleteCertification as exc:
        print(f"incomplete certification: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    return 0


if __name__ == "__main__":
    sys.exit(main())
