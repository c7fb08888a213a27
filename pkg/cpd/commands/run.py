from __future__ import annotations

import argparse
from pathlib import Path

from cpd.core.errors import CoverageError
from cpd.core.paths import RESULTS_DIR
from cpd.core.responses import ok
from cpd.harness import load_config, run_experiment, write_records


def register(sub) -> None:
    p = sub.add_parser("run", help="run a Monte Carlo experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="per-trial CSV (default: <data root>/results/<config stem>.csv)")
    p.add_argument("--workers", type=int)
    p.add_argument("--assert", dest="check", action="store_true",
                   help="exit 4 when coverage falls below the slack threshold")
    p.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    out = Path(args.out) if args.out else RESULTS_DIR / f"{Path(args.config).stem}.csv"
    records, summary = run_experiment(cfg, workers=args.workers)
    write_records(out, records)
    if args.check and not summary.passed:
        raise CoverageError(
            "coverage below threshold",
            summary=summary,
            out=str(out),
        )
    return ok({"out": str(out), "summary": summary})
