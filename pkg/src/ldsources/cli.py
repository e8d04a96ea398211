"""Command-line front end.

Exit codes: 0 success, 2 invalid input (spec file, flags, schedule),
3 computation failure (solver, empty conditioning set).
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys

import numpy as np

from . import __version__
from .core import SIMPLEX, LinearEq, LinearIneq, evaluate_set, flatten
from .divergence import NEG_INF
from .enumeration import EnumerationPlan, k_equivalent, quantize_prior, round_to_type, write_types
from .partitions import l_m_divergence, quantize
from .posterior import (
    ConditioningOnNullError,
    check_static_schedule,
    colt_series,
    colt_series_dynamic,
    colt_types,
    decay_series,
    dynamic_decay_series,
    map_source,
    types_rate_series,
)
from .projection import ProjectionError, i_projection, l_projection
from .specfile import SpecError, load_spec

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_COMPUTE = 3

CSV_COLUMNS = ["n", "k", "numerator_log", "denominator_log", "probability", "rate", "lower", "upper", "limit"]


class _Validation(Exception):
    pass


def _fmt_log(x, base):
    if x is None or x == "":
        return ""
    if x == NEG_INF:
        return "-inf"
    if base == "2":
        x = x / math.log(2)
    return f"{x:.16e}"


def _fmt_prob(p):
    return "" if p is None else f"{p:.6f}"


def _emit(rows, columns, fmt, out, title=""):
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([r.get(c, "") for c in columns])
        return
    if title:
        out.write(title + "\n")
    widths = [max(len(c), *(len(str(r.get(c, ""))) for r in rows)) if rows else len(c) for c in columns]
    out.write("  ".join(c.rjust(wd) for c, wd in zip(columns, widths)) + "\n")
    for r in rows:
        out.write("  ".join(str(r.get(c, "")).rjust(wd) for c, wd in zip(columns, widths)) + "\n")


def _need(spec, attr, what):
    if getattr(spec, attr) is None:
        raise _Validation(f"the spec file has no '{attr}' ({what})")
    return getattr(spec, attr)


def _limit_pmf(spec):
    return [float(x) for x in _need(spec, "limit", "limit pmf for dynamic mode")]


def cmd_table1(spec, args, out):
    eps = _need(spec, "epsilon", "ball radius")
    conv = args.ball or spec.ball
    what = "L-projection"
    if spec.type is None and spec.limit is None and spec.source is not None:
        # types side: conditional law of the type given the rare event
        r = [float(x) for x in spec.source]
        reps = colt_types(spec.set, r, eps, spec.sample_sizes(), conv, args.jobs)
        what = "I-projection"
    elif spec.mode == "dynamic":
        ns = spec.sample_sizes()
        reps = colt_series_dynamic(spec.set, _limit_pmf(spec), eps, ns, spec.prior, conv, args.jobs)
    else:
        t0 = _need(spec, "type", "observed n0-type")
        ns = spec.sample_sizes()
        try:
            ks = check_static_schedule(t0.n, ns)
        except ValueError as exc:
            raise _Validation(str(exc)) from exc
        try:
            reps = colt_series(spec.set, t0, eps, ks, spec.prior, conv, args.jobs)
        except ValueError as exc:
            raise _Validation(str(exc)) from exc
    rows = [
        {
            "n": r.n,
            "k": "" if r.k is None else r.k,
            "numerator_log": _fmt_log(r.log_numerator, args.log_base),
            "denominator_log": _fmt_log(r.log_denominator, args.log_base),
            "probability": _fmt_prob(r.probability),
        }
        for r in reps
    ]
    cols = CSV_COLUMNS if args.format == "csv" else ["n", "k", "probability"]
    _emit(rows, cols, args.format, out, f"conditional mass of the {conv} ball of radius {eps} around the {what}")


def cmd_project(spec, args, out):
    which = args.which
    if which == "l":
        if spec.mode == "dynamic":
            p = _limit_pmf(spec)
        else:
            p = _need(spec, "type", "observed type").pmf().weights
        res = l_projection(p, spec.set)
    else:
        r = [float(x) for x in _need(spec, "source", "source pmf r")]
        res = i_projection(r, spec.set)
    resid = 0.0
    for atom in flatten(spec.set):
        if isinstance(atom, LinearEq):
            resid = max(resid, abs(atom.residual(res.weights)))
        elif isinstance(atom, LinearIneq):
            r = atom.residual(res.weights)
            resid = max(resid, -r if atom.sense == ">=" else r, 0.0)
    theta = "" if res.theta is None else " ".join(f"{x:.12g}" for x in np.atleast_1d(res.theta))
    row = {
        "kind": res.kind,
        "pmf": " ".join(f"{x:.12g}" for x in res.weights),
        "theta": theta,
        "objective": _fmt_log(res.objective, args.log_base),
        "constraint_residual": f"{resid:.3e}",
        "solver_residual": f"{res.residual:.3e}",
        "iterations": res.iterations,
    }
    if args.format == "csv":
        _emit([row], list(row), "csv", out)
    else:
        for key, val in row.items():
            out.write(f"{key:>20}: {val}\n")
        out.write(f"{'pmf (3 d.p.)':>20}: [{', '.join(f'{x:.3f}' for x in res.weights)}]\n")


def cmd_sanov(spec, args, out):
    base = args.log_base
    cols = CSV_COLUMNS + ["abs_error"]
    rows = []
    if args.side == "types":
        r = [float(x) for x in _need(spec, "source", "source pmf r")]
        ns = spec.sample_sizes()
        for e in types_rate_series(spec.set, r, ns, args.jobs):
            rows.append(
                {
                    "n": e.n,
                    "numerator_log": _fmt_log(e.log_probability, base),
                    "denominator_log": _fmt_log(0.0, base),
                    "probability": f"{math.exp(e.log_probability):.6e}",
                    "rate": _fmt_log(e.rate, base),
                    "limit": _fmt_log(e.limit, base),
                    "abs_error": _fmt_log(e.error, base),
                }
            )
    else:
        if spec.mode == "dynamic":
            entries = dynamic_decay_series(spec.set, _limit_pmf(spec), spec.sample_sizes(), spec.prior, args.jobs)
        else:
            t0 = _need(spec, "type", "observed n0-type")
            try:
                ks = check_static_schedule(t0.n, spec.sample_sizes())
            except ValueError as exc:
                raise _Validation(str(exc)) from exc
            entries = decay_series(spec.set, t0, ks, spec.prior, args.jobs)
        for e in entries:
            prob = math.exp(e.log_numerator - e.log_denominator) if e.log_numerator > NEG_INF else 0.0
            rows.append(
                {
                    "n": e.n,
                    "k": "" if e.k is None else e.k,
                    "numerator_log": _fmt_log(e.log_numerator, base),
                    "denominator_log": _fmt_log(e.log_denominator, base),
                    "probability": f"{prob:.6e}",
                    "rate": _fmt_log(e.rate, base),
                    "lower": _fmt_log(e.lower, base),
                    "upper": _fmt_log(e.upper, base),
                    "limit": _fmt_log(e.limit, base),
                    "abs_error": _fmt_log(e.error, base),
                }
            )
    _emit(rows, cols, args.format, out, f"decay rates ({args.side} side)")


def _types_for_schedule(spec):
    if spec.mode == "dynamic":
        p = _limit_pmf(spec)
        return [round_to_type(p, n) for n in spec.sample_sizes()]
    t0 = _need(spec, "type", "observed type")
    try:
        ks = check_static_schedule(t0.n, spec.sample_sizes())
    except ValueError as exc:
        raise _Validation(str(exc)) from exc
    return [k_equivalent(t0, k) for k in ks]


def cmd_map(spec, args, out):
    rows = []
    for t in _types_for_schedule(spec):
        src, mass = map_source(spec.set, t, spec.prior, args.jobs, with_mass=True)
        rows.append(
            {
                "n": t.n,
                "type": " ".join(map(str, t.counts)),
                "map_source": " ".join(map(str, src.counts)),
                "posterior_mass": f"{mass:.6e}",
                "in_set": str(evaluate_set(spec.set, src)).lower(),
            }
        )
    _emit(rows, list(rows[0]) if rows else [], args.format, out, "maximum a-posteriori n-sources")


def cmd_enumerate(spec, args, out):
    for n in spec.sample_sizes():
        plan = EnumerationPlan(n, spec.m, None if spec.set is SIMPLEX else spec.set)
        out.write(f"# n={n} m={spec.m}\n")
        for rows in plan.chunks():
            write_types(rows, out)


def cmd_quantize(spec, args, out):
    if spec.partitions:
        qm, pm = spec.masses.get("Q"), spec.masses.get("P")
        if qm is None or pm is None:
            raise _Validation("quantize with partitions needs masses.Q and masses.P")
        rows = []
        for i, (part, q, p) in enumerate(zip(spec.partitions, qm, pm)):
            try:
                qq, pp = quantize(q, part), quantize(p, part)
            except ValueError as exc:
                raise _Validation(f"partition {i}: {exc}") from exc
            rows.append(
                {
                    "partition": i,
                    "cells": part.m,
                    "Q": " ".join(f"{x:.6f}" for x in qq.weights),
                    "P": " ".join(f"{x:.6f}" for x in pp.weights),
                    "L": _fmt_log(l_m_divergence([q], [p], [part]), args.log_base),
                }
            )
        total = l_m_divergence(qm, pm, spec.partitions)
        rows.append({"partition": "max", "L": _fmt_log(total, args.log_base)})
        _emit(rows, ["partition", "cells", "Q", "P", "L"], args.format, out, "partition-wise L-divergence")
        return
    if spec.prior.is_uniform:
        raise _Validation("quantize needs partitions or an atom prior")
    rows = []
    for n in spec.sample_sizes():
        qp = quantize_prior(spec.prior, n, spec.m)
        for t in qp.support():
            rows.append({"n": n, "source": " ".join(map(str, t.counts)), "mass": f"{qp.masses[t]:.12g}"})
    _emit(rows, ["n", "source", "mass"], args.format, out, "quantized prior")


COMMANDS = {
    "table1": cmd_table1,
    "project": cmd_project,
    "sanov": cmd_sanov,
    "map": cmd_map,
    "enumerate": cmd_enumerate,
    "quantize": cmd_quantize,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", metavar="PATH", help="problem-spec file (default: the bundled worked example)")
    common.add_argument("--ball", choices=["half-l1", "l1"], help="override the spec's ball convention")
    common.add_argument("--format", choices=["csv", "text"], default="text")
    common.add_argument("--log-base", choices=["e", "2"], default="e", help="display base for logs and rates")
    common.add_argument("--jobs", type=int, default=1, metavar="N")
    common.add_argument("--out", metavar="PATH", help="write here instead of stdout")

    parser = argparse.ArgumentParser(prog="ldsources", description="Conditioning by rare sources on finite alphabets.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("table1", parents=[common], help="concentration of n-sources on the L-projection")
    p = sub.add_parser("project", parents=[common], help="I- or L-projection onto the spec's set")
    p.add_argument("--which", choices=["i", "l"], default="l")
    p = sub.add_parser("sanov", parents=[common], help="decay rates with bounds and limits")
    p.add_argument("--side", choices=["types", "sources"], default="sources")
    sub.add_parser("map", parents=[common], help="maximum a-posteriori n-source")
    sub.add_parser("enumerate", parents=[common], help="list the n-sources of the spec's set")
    sub.add_parser("quantize", parents=[common], help="partition or prior quantization")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        spec = load_spec(args.spec)
        buf = io.StringIO()
        COMMANDS[args.command](spec, args, buf)
    except (SpecError, _Validation) as exc:
        print(f"ldsources: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ProjectionError, ConditioningOnNullError, ValueError, ZeroDivisionError) as exc:
        print(f"ldsources: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
