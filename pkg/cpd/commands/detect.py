from __future__ import annotations

import argparse
from pathlib import Path

from cpd.core.csv_io import write_rows
from cpd.core.errors import InputError
from cpd.core.responses import ok
from cpd.core.serialize import fmt_float
from cpd.detect import cluster_runs, detect_pipeline
from cpd.signals import read_series, read_signal, signal_stats


def register(sub) -> None:
    p = sub.add_parser("detect", help="screening change point detector")
    p.add_argument("--input", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--truth", required=True,
                   help="ground-truth signal; H_n and W_n are taken from it")
    p.add_argument("--family", default="gaussian",
                   choices=["gaussian", "sub_gaussian_bounded", "sub_exponential"])
    p.add_argument("--group", action="store_true")
    p.add_argument("--output", required=True)
    p.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    y = read_series(args.input)
    truth = read_signal(args.truth)
    if truth.n != y.shape[0]:
        raise InputError(f"{args.input} has {y.shape[0]} rows, {args.truth} has n={truth.n}")
    stats = signal_stats(truth)
    res = detect_pipeline(y, args.sigma, args.t, stats, family=args.family, group=args.group)

    out = Path(args.output)
    write_rows(out, ["index"], ([i] for i in res.Shat))
    params = res.params
    data = {
        "output": str(out),
        "detected": len(res.Shat),
        "clusters": list(cluster_runs(res.Shat)),
        "offset": res.offset_used,
        "threshold": res.threshold_used,
        "lambda": res.lam,
        "C": params.C,
        "dH": res.dH_to_truth,
        "dH_guarantee": params.dH_guarantee,
    }
    side = out.with_name(f"{out.stem}.params.csv")
    write_rows(
        side, ["key", "value"],
        ([k, "" if v is None else fmt_float(v)] for k, v in data.items() if k not in ("output", "clusters")),
    )
    return ok(data)
