from __future__ import annotations

import argparse

from cpd.core.errors import InputError
from cpd.core.responses import err, ok
from cpd.schemes import AnchoredProblem
from cpd.signals import read_series, write_series
from cpd.solver1d import solve_anchored, solve_fused_lasso
from cpd.solvernd import solve_group_fused_lasso


def register(sub) -> None:
    p = sub.add_parser("denoise", help="exact scalar fused lasso")
    p.add_argument("--input", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--anchor-left", type=float)
    p.add_argument("--anchor-right", type=float)
    p.set_defaults(handler=handle_denoise)

    g = sub.add_parser("gdenoise", help="group fused lasso for vector series")
    g.add_argument("--input", required=True)
    g.add_argument("--lambda", dest="lam", type=float, required=True)
    g.add_argument("--tol", type=float)
    g.add_argument("--max-iter", type=int)
    g.add_argument("--method", choices=["active_set", "bcd"], default="active_set")
    g.add_argument("--output", required=True)
    g.set_defaults(handler=handle_gdenoise)


def handle_denoise(args: argparse.Namespace) -> int:
    y = read_series(args.input)
    if y.ndim != 1:
        raise InputError(f"{args.input}: denoise expects an index,value series; use gdenoise for vectors")
    if args.anchor_left is None and args.anchor_right is None:
        sol = solve_fused_lasso(y, args.lam)
    else:
        sol = solve_anchored(AnchoredProblem(y=y, a=args.anchor_left, b=args.anchor_right, lam=args.lam))
    write_series(args.output, sol.xhat)
    return ok({
        "output": args.output,
        "objective": sol.objective,
        "kkt_residual": sol.kkt_residual,
        "jumps": len(sol.jump_set),
    })


def handle_gdenoise(args: argparse.Namespace) -> int:
    Y = read_series(args.input)
    sol = solve_group_fused_lasso(Y, args.lam, tol=args.tol, max_iter=args.max_iter, method=args.method)
    write_series(args.output, sol.Xhat if Y.ndim == 2 else sol.Xhat[:, 0])
    data = {
        "output": args.output,
        "objective": sol.objective,
        "duality_gap": sol.duality_gap,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "jumps": len(sol.jump_set),
    }
    if not sol.converged:
        return err("group solver did not converge", exit_code=3, code="solver_failure", **data)
    return ok(data)
