from __future__ import annotations

import argparse
from pathlib import Path

from cpd import bounds
from cpd.core.csv_io import write_rows
from cpd.core.errors import InputError
from cpd.core.responses import ok
from cpd.core.serialize import fmt_float
from cpd.signals import make_signal, read_signal, signal_stats


def register(sub) -> None:
    p = sub.add_parser("bounds", help="per-index error bounds for a signal")
    p.add_argument("--signal")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--family", default="gaussian",
                   choices=["gaussian", "sub_gaussian_bounded", "sub_exponential"])
    p.add_argument("--group", action="store_true")
    p.add_argument("--p", type=int)
    p.add_argument("--anchored", type=int, metavar="M",
                   help="bound for an anchored segment of length M instead of a signal file")
    p.add_argument("--n", type=int, help="series length for M_y with --anchored (default M)")
    p.add_argument("--opposite-signs", action="store_true",
                   help="anchors lie on opposite sides of the segment level")
    p.add_argument("--output", required=True)
    p.set_defaults(handler=handle)


def handle_anchored(args: argparse.Namespace) -> int:
    if args.group:
        raise InputError("--anchored applies to the scalar estimator only")
    n = args.anchored if args.n is None else args.n
    if n < args.anchored:
        raise InputError(f"--n {n} is shorter than the segment length {args.anchored}")
    My = bounds.compute_My_scalar(args.sigma, n, args.t, args.family)
    b = bounds.anchored_bound(args.anchored, args.lam, My, opposite_signs=args.opposite_signs)

    out = Path(args.output)
    write_rows(out, ["index", "bound"], ([i + 1, fmt_float(v)] for i, v in enumerate(b)))
    return ok({
        "output": str(out),
        "segment_length": args.anchored,
        "My": My,
        "lambda": args.lam,
        "confidence": 1.0 - 1.0 / (args.t * args.t),
        "max_bound": float(b.max()),
    })


def handle(args: argparse.Namespace) -> int:
    if args.anchored is not None:
        return handle_anchored(args)
    if args.signal is None:
        raise InputError("one of --signal or --anchored is required")
    sig = read_signal(args.signal)
    if args.group and not sig.vector:
        sig = make_signal(sig.n, sig.changepoints, [list(lv) for lv in sig.levels], vector=True)
    if args.p is not None and args.p != sig.p:
        raise InputError(f"--p {args.p} does not match the signal dimension {sig.p}")

    stats = signal_stats(sig)
    if args.group:
        My = bounds.compute_My_group(args.sigma, sig.n, args.t, sig.p)
    else:
        My = bounds.compute_My_scalar(args.sigma, sig.n, args.t, args.family)
    profile = bounds.bound_profile(stats, args.lam, My, args.t, "group" if args.group else "scalar")

    m = stats.segment_lengths[stats.k_of]
    rows = (
        [i + 1, int(stats.d[i]), int(m[i]), fmt_float(b)]
        for i, b in enumerate(profile.per_index)
    )
    out = Path(args.output)
    write_rows(out, ["index", "d", "segment_length", "bound"], rows)

    summary = {
        "regime": profile.regime,
        "My": profile.My,
        "lambda": profile.lam,
        "t": profile.t,
        "confidence": profile.confidence,
        "sos_bound": profile.sos_bound,
        "max_bound": float(profile.per_index.max()),
    }
    side = out.with_name(f"{out.stem}.summary.csv")
    write_rows(side, ["key", "value"], ([k, v if isinstance(v, str) else fmt_float(v)] for k, v in summary.items()))
    return ok({"output": str(out), "summary": str(side), **summary})
