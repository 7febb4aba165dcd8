"""Command-line pipeline driver.

Subcommands: collapse, reparam, export, check, involute, sweep.
Exit codes: 0 success, 1 error, 2 validation flags raised.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io as gio
from .collapse import CollapseSchedule, collapse
from .errors import GridGuideError
from .feasibility import check_compression
from .geometry import PlanarArcCurve, involute
from .reparam import GAConfig, linearize, optimize_synchronized, select_n
from .rod import default_joint_weight


class _UsageError(GridGuideError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad usage; map that onto our exit code 1
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="gridguide", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("collapse", help="collapse a grid model and trace deployment paths")
    p.add_argument("model")
    p.add_argument("--schedule", help="JSON file with collapse schedule settings")
    p.add_argument("-o", "--output", required=True, help="trace output file")

    p = sub.add_parser("reparam", help="optimally linearize a trace set")
    p.add_argument("trace")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--n", type=int, help="fixed interior vertex count")
    group.add_argument("--auto-r", type=float, help="sweep n until sqrt(E_ass) < r")
    p.add_argument("--nmax", type=int, default=15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--population", type=int, default=60)
    p.add_argument("--generations", type=int, default=150)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("-o", "--output", required=True, help="linearized paths output file")

    p = sub.add_parser("export", help="export a linearized path set as a schedule")
    p.add_argument("linpaths")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("check", help="audit a schedule for member compression")
    p.add_argument("linpaths")
    p.add_argument("model")
    p.add_argument("--threshold", type=float, default=0.02)
    p.add_argument("--samples", type=int, default=9)
    p.add_argument("--force", action="store_true", help="ignore provenance mismatches")
    p.add_argument("-o", "--output", help="optional JSON report output")

    p = sub.add_parser("involute", help="compute the involute path of a planar curve")
    p.add_argument("--curve", required=True, help="JSON file with curve sample points")
    p.add_argument("--s0", type=float, required=True, help="traced material arc length")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("sweep", help="print the E_ass-vs-n sweep table for a trace")
    p.add_argument("trace")
    p.add_argument("--r", type=float, required=True, help="lamella thickness threshold")
    p.add_argument("--nmax", type=int, default=15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--population", type=int, default=60)
    p.add_argument("--generations", type=int, default=150)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("-o", "--output", help="optional CSV output of the sweep table")

    for sp in sub.choices.values():
        sp.add_argument("--threads", type=int, default=1, help=argparse.SUPPRESS)
    return parser


def _ga_config(args) -> GAConfig:
    return GAConfig(
        population=args.population,
        generations=args.generations,
        restarts=args.restarts,
        seed=args.seed,
    )


def _cmd_collapse(args) -> int:
    grid = gio.load_model(args.model)
    if args.schedule:
        with open(args.schedule) as fh:
            cfg = json.load(fh)
        schedule = CollapseSchedule(**cfg)
    else:
        stiff = default_joint_weight(grid) / 1e4  # typical axial stiffness scale
        lam0 = max(stiff, 1.0)
        schedule = CollapseSchedule(lambda0=lam0, dlambda=lam0 / 50.0)
    trace = collapse(grid, schedule)
    trace.provenance["model_hash"] = gio.model_hash(grid)
    gio.save_trace(trace, args.output)
    print(
        f"collapse: {trace.m} paths, {len(trace.times)} synchronized states -> {args.output}"
    )
    return 0


def _cmd_reparam(args) -> int:
    trace = gio.load_trace(args.trace)
    cfg = _ga_config(args)
    if args.n is not None:
        res = optimize_synchronized(trace, args.n, cfg)
        chosen_n, knots, report = args.n, res.knots, res.report
        extra = {}
    else:
        res = select_n(trace, args.auto_r, n_max=args.nmax, config=cfg)
        chosen_n, knots, report = res.n, res.knots, res.report
        extra = {"sweep": res.sweep, "threshold_met": res.threshold_met, "r": args.auto_r}
        if not res.threshold_met:
            print(
                f"warning: sqrt(E_ass) threshold not met within n <= {args.nmax}",
                file=sys.stderr,
            )
    provenance = {
        "trace_hash": gio.trace_hash(trace),
        "model_hash": trace.provenance.get("model_hash"),
        "n": chosen_n,
        "seed": args.seed,
        "e_ass": report.energy,
        **extra,
    }
    lp = linearize(trace, knots, provenance)
    gio.save_linpaths(lp, args.output)
    print(
        f"reparam: n={chosen_n}, E_ass={report.energy:.6g}, "
        f"sqrt={np.sqrt(report.energy):.6g} -> {args.output}"
    )
    return 0


def _cmd_export(args) -> int:
    lp = gio.load_linpaths(args.linpaths)
    gio.export_schedule(lp, args.format, args.output)
    print(f"export: {len(lp.node_refs)} nodes x {len(lp.knots)} knots -> {args.output}")
    return 0


def _cmd_check(args) -> int:
    lp = gio.load_linpaths(args.linpaths)
    grid = gio.load_model(args.model)
    gio.check_provenance(
        lp.provenance.get("model_hash"), gio.model_hash(grid), "model", force=args.force
    )
    report = check_compression(lp, grid, samples_per_segment=args.samples,
                               threshold=args.threshold)
    if args.output:
        payload = {
            "schema": "gridguide/compression-report-v1",
            "worst_ratio": report.worst_ratio,
            "threshold": report.threshold,
            "flags": [vars(f) for f in report.flags],
            "members_checked": report.members_checked,
        }
        gio.atomic_write_text(args.output, json.dumps(payload, indent=1) + "\n")
    print(
        f"check: worst compression ratio {report.worst_ratio:.4f} "
        f"({len(report.flags)} flags at threshold {args.threshold:g})"
    )
    if report.flags:
        for f in report.flags[:10]:
            print(
                f"  flagged: member {f.member} vertices {f.vertex_pair} "
                f"segment {f.segment} ratio {f.ratio:.4f}",
                file=sys.stderr,
            )
        if len(report.flags) > 10:
            print(f"  ... {len(report.flags) - 10} more", file=sys.stderr)
        return 2
    return 0


def _cmd_involute(args) -> int:
    with open(args.curve) as fh:
        payload = json.load(fh)
    pts = np.asarray(payload["points"] if isinstance(payload, dict) else payload, dtype=float)
    curve = PlanarArcCurve(pts)
    path = involute(curve, args.s0, args.samples)
    out = {
        "schema": "gridguide/path-v1",
        "times": path.times.tolist(),
        "vertices": path.vertices.tolist(),
    }
    gio.atomic_write_text(args.output, json.dumps(out, indent=1) + "\n")
    print(f"involute: {args.samples} samples, s0={args.s0:g} -> {args.output}")
    return 0


def _cmd_sweep(args) -> int:
    trace = gio.load_trace(args.trace)
    res = select_n(trace, args.r, n_max=args.nmax, config=_ga_config(args))
    print("n,E_ass,sqrt_E_ass")
    lines = ["n,E_ass,sqrt_E_ass"]
    for n, e in res.sweep:
        row = f"{n},{e:.9g},{np.sqrt(e):.9g}"
        print(row)
        lines.append(row)
    status = "met" if res.threshold_met else "NOT met"
    print(f"threshold sqrt(E_ass) < {args.r:g}: {status} (chosen n = {res.n})")
    if args.output:
        gio.atomic_write_text(args.output, "\n".join(lines) + "\n")
    return 0


_COMMANDS = {
    "collapse": _cmd_collapse,
    "reparam": _cmd_reparam,
    "export": _cmd_export,
    "check": _cmd_check,
    "involute": _cmd_involute,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            print(parser.format_usage(), file=sys.stderr)
            return 1
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except GridGuideError as exc:
        print(f"gridguide: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"gridguide: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
