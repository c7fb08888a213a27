from __future__ import annotations

import argparse

from cpd.commands._args import int_list, level_list
from cpd.core.responses import ok
from cpd.schemes import NoiseSpec
from cpd.signals import make_signal, sample_observation, signal_stats, write_series, write_signal


def register(sub) -> None:
    p = sub.add_parser("gen-signal", help="write a piecewise-constant signal (and optionally a noisy copy)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--cps", type=int_list, required=True, help="1-based segment starts, e.g. 1,251")
    p.add_argument("--levels", type=level_list, required=True, help="0,2 or 0,0,0;1,1,1 for vectors")
    p.add_argument("--out", required=True)
    p.add_argument("--noisy-out", help="also write y = x + noise here")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--family", default="gaussian",
                   choices=["gaussian", "sub_gaussian_bounded", "sub_exponential"])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    vector = bool(args.levels) and isinstance(args.levels[0], list)
    sig = make_signal(args.n, args.cps, args.levels, vector=vector)
    write_signal(args.out, sig)
    stats = signal_stats(sig)
    data = {"path": args.out, "n": sig.n, "K": sig.K, "p": sig.p, "W_n": stats.W_n, "H_n": stats.H_n}
    if args.noisy_out:
        obs = sample_observation(sig, NoiseSpec(sigma=args.sigma, family=args.family, seed=args.seed))
        write_series(args.noisy_out, obs.y)
        data["noisy"] = args.noisy_out
    return ok(data)
