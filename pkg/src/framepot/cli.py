"""Command-line front end.

Exit codes: 0 ok, 1 comparison failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import analytic, constructions
from .geometry import FieldTag, gram
from .report import (
    _clean_p,
    SweepSpec,
    TableFormatError,
    compare_with_analytic,
    detect_simplex,
    difference_table,
    export_table,
    fit_quadratic,
    import_table,
    run_sweep,
    table_to_csv,
)
from .solver import SolverParams, multi_start

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_range(text: str) -> tuple:
    parts = text.split(":")
    try:
        if len(parts) == 1:
            lo = hi = int(parts[0])
        elif len(parts) == 2:
            lo, hi = int(parts[0]), int(parts[1])
        else:
            raise ValueError
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or LO:HI, got {text!r}") from None
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"empty or non-positive range {text!r}")
    return lo, hi


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _add_solver_flags(ap, seed_required=False):
    g = ap.add_argument_group("solver")
    g.add_argument("--seed", type=int, required=seed_required, default=None if seed_required else 0)
    g.add_argument("--initial-step", type=float, default=SolverParams.initial_step)
    g.add_argument("--min-step", type=float, default=SolverParams.min_step)
    g.add_argument("--max-sweeps", type=int, default=None)
    g.add_argument("--accept-window", type=int, default=SolverParams.accept_window)
    g.add_argument("--accept-high", type=float, default=SolverParams.accept_high)
    g.add_argument("--accept-low", type=float, default=SolverParams.accept_low)
    g.add_argument("--step-up", type=float, default=SolverParams.step_up)
    g.add_argument("--step-down", type=float, default=SolverParams.step_down)
    g.add_argument("--params", type=Path, help="JSON file of solver parameters (overrides flags)")


def _solver_params(args, record_trace=True) -> SolverParams:
    if args.params is not None:
        data = json.loads(args.params.read_text())
        data.setdefault("seed", args.seed)
        return SolverParams.from_dict(data)
    return SolverParams(
        initial_step=args.initial_step,
        min_step=args.min_step,
        max_sweeps=args.max_sweeps,
        accept_window=args.accept_window,
        accept_high=args.accept_high,
        accept_low=args.accept_low,
        step_up=args.step_up,
        step_down=args.step_down,
        seed=args.seed,
        record_trace=record_trace,
    )


def cmd_solve(args, out) -> int:
    params = _solver_params(args, record_trace=args.trace_csv is not None)
    stab = multi_start(args.m, args.n, args.p, args.field, params, runs=args.runs)
    best = stab.best
    summary = gram(best.best_config, exponents=(args.p,))
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["m", "n", "p", "field", "runs", "best_potential", "spread", "proposals", "accepts",
                "final_step", "termination", "coherence_min", "coherence_max"])
    w.writerow([args.m, args.n, _clean_p(args.p), FieldTag.parse(args.field).value, args.runs, repr(best.best_potential),
                repr(stab.spread), best.proposals, best.accepts, repr(best.final_step), best.termination.value,
                repr(summary.coherence_min), repr(summary.coherence_max)])
    if args.m >= 2:
        flag = detect_simplex(best.best_config)
        out.write(f"# simplex={int(flag.is_simplex)} coherence_mean={flag.coherence_mean!r} "
                  f"coherence_spread={flag.coherence_spread:.3e}\n")
    exact = analytic.exact_for_cell(args.m, args.n, args.p, args.field)
    if exact is not None:
        out.write(f"# closed_form={_frac(exact.value)} domain_ok={int(exact.domain_ok)} "
                  f"abs_gap={abs(best.best_potential - float(exact.value)):.3e}\n")
    if args.config_out:
        args.config_out.write_text(best.best_config.to_json(indent=1))
    if args.trace_csv:
        args.trace_csv.write_text(best.trace_csv())
    return EXIT_OK


def cmd_sweep(args, out) -> int:
    spec = SweepSpec(
        m_range=args.m,
        n_range=args.n,
        p_list=tuple(args.p),
        field=args.field,
        solver=_solver_params(args, record_trace=False),
        runs_per_cell=args.runs,
        output_path=str(args.out) if args.out else None,
        simplex_tol=args.simplex_tol,
    )
    table = run_sweep(spec)
    if args.csv:
        export_table(table, args.csv, "csv")
    out.write(table_to_csv(table))
    return EXIT_OK


def cmd_construct(args, out) -> int:
    kind = args.kind
    if kind == "tight-frame":
        if args.m is None or args.n is None:
            raise UsageError("tight-frame needs --m and --n")
        cfg = constructions.tight_frame(args.m, args.n, args.field)
        p = args.p or 2
    else:
        if kind == "hadamard4":
            pts = constructions.hadamard4()
        elif kind == "cosine":
            if args.m is None:
                raise UsageError("cosine needs --m")
            pts = constructions.cosine_curve(args.m)
        elif kind == "double":
            if args.r is None:
                raise UsageError("double needs --r")
            pts = constructions.antipodal_double(constructions.doubling_input(args.r))
        else:
            raise UsageError(f"unknown construction {kind}")
        if args.sphere:
            out.write(json.dumps({"points": pts.points.tolist()}, indent=1) + "\n")
            return EXIT_OK
        cfg = constructions.lift_to_cp1(pts)
        p = args.p or (6 if kind == "double" else 4)
    summary = gram(cfg, exponents=(p,))
    exact = analytic.exact_for_cell(cfg.m, cfg.n, p, cfg.field)
    info = {"m": cfg.m, "n": cfg.n, "p": p, "potential": summary.potential_by_p[p]}
    if exact is not None:
        info["closed_form"] = _frac(exact.value)
        info["domain_ok"] = exact.domain_ok
    info["config"] = cfg.to_dict()
    out.write(json.dumps(info, indent=1) + "\n")
    if args.out:
        args.out.write_text(cfg.to_json(indent=1))
    return EXIT_OK


def cmd_exact(args, out) -> int:
    q = args.quantity
    need = {"p2": ("m", "n"), "p4n2": ("m",), "p6n2": ("m",), "simplex": ("m", "n"),
            "moment": ("k", "n"), "leading": ("p", "n")}[q]
    for name in need:
        if getattr(args, name) is None:
            raise UsageError(f"exact {q} needs --{name}")
    if q == "p2":
        v = analytic.exact_p2(args.m, args.n)
    elif q == "p4n2":
        v = analytic.exact_p4_n2(args.m)
    elif q == "p6n2":
        v = analytic.exact_p6_n2(args.m)
    elif q == "simplex":
        v = analytic.simplex_coherence_sq(args.m, args.n)
    elif q == "moment":
        v = analytic.equidistribution_moment(args.k, args.n)
    else:
        v = analytic.asymptotic_leading_coeff(args.p, args.n)
    out.write(json.dumps(v.to_dict()) + "\n")
    return EXIT_OK


def cmd_check(args, out) -> int:
    table = import_table(args.table)
    rep = compare_with_analytic(table, rtol=args.rtol, atol=args.atol)
    out.write(rep.render())
    out.write(f"# {'OK' if rep.ok else 'FAILED'}: {sum(r.passed for r in rep.rows)}/{len(rep.rows)} cells within tolerance\n")
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_diff(args, out) -> int:
    table = import_table(args.table)
    rep = difference_table(table, axis=args.axis, p=args.p)
    if not rep.measured.cells:
        raise UsageError("not enough contiguous cells for a second difference")
    out.write(rep.render())
    return EXIT_OK


def cmd_fit(args, out) -> int:
    table = import_table(args.table)
    series = table.series(args.p, args.n)
    if args.m is not None:
        lo, hi = args.m
        series = {m: v for m, v in series.items() if lo <= m <= hi}
    fit = fit_quadratic(series)
    info = {"p": args.p, "n": args.n, "points": len(series), "A2": fit.a2, "A1": fit.a1, "A0": fit.a0,
            "residual": fit.residual}
    if float(args.p).is_integer() and int(args.p) % 2 == 0 and args.n >= 2:
        lead = analytic.asymptotic_leading_coeff(int(args.p), args.n).value
        info["A2_equidistribution"] = _frac(lead)
        info["A2_rel_gap"] = abs(fit.a2 - float(lead)) / float(lead)
    out.write(json.dumps(info) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="framepot", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__import__('framepot').__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="minimize a single (m, n, p) cell")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--field", default="C", choices=["R", "C"])
    s.add_argument("--runs", type=int, default=5)
    s.add_argument("--config-out", type=Path)
    s.add_argument("--trace-csv", type=Path)
    _add_solver_flags(s)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("sweep", help="solve a grid of cells and write a table")
    s.add_argument("--m", type=parse_range, required=True, help="LO:HI")
    s.add_argument("--n", type=parse_range, required=True, help="LO:HI")
    s.add_argument("--p", type=float, action="append", required=True, help="repeatable")
    s.add_argument("--field", default="C", choices=["R", "C"])
    s.add_argument("--runs", type=int, default=5)
    s.add_argument("--simplex-tol", type=float, default=1e-3)
    s.add_argument("--out", type=Path, help="JSON table path")
    s.add_argument("--csv", type=Path, help="also write the CSV table here")
    _add_solver_flags(s, seed_required=True)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("construct", help="build an exact minimizer")
    s.add_argument("kind", choices=["tight-frame", "cosine", "hadamard4", "double"])
    s.add_argument("--m", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--r", type=int, help="half size for the antipodal doubling")
    s.add_argument("--p", type=int, help="exponent to evaluate (default 2, 4 or 6)")
    s.add_argument("--field", default="C", choices=["R", "C"])
    s.add_argument("--sphere", action="store_true", help="print the S^2 points instead of the lift")
    s.add_argument("--out", type=Path, help="write the configuration JSON here")
    s.set_defaults(func=cmd_construct)

    s = sub.add_parser("exact", help="query a closed form")
    s.add_argument("quantity", choices=["p2", "p4n2", "p6n2", "simplex", "moment", "leading"])
    s.add_argument("--m", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--k", type=int)
    s.add_argument("--p", type=int)
    s.set_defaults(func=cmd_exact)

    s = sub.add_parser("check", help="compare a table with the closed forms")
    s.add_argument("table", type=Path)
    s.add_argument("--rtol", type=float, default=1e-4)
    s.add_argument("--atol", type=float, default=1e-8)
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("diff", help="second differences of a table")
    s.add_argument("table", type=Path)
    s.add_argument("--p", type=float, default=2)
    s.add_argument("--axis", default="m", choices=["m", "n"])
    s.set_defaults(func=cmd_diff)

    s = sub.add_parser("fit", help="quadratic fit in m at fixed (p, n)")
    s.add_argument("table", type=Path)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--m", type=parse_range, help="restrict to LO:HI")
    s.set_defaults(func=cmd_fit)
    return ap


def main(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args, out)
    except (UsageError, TableFormatError, ValueError, OverflowError, OSError) as exc:
        print(f"framepot {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
