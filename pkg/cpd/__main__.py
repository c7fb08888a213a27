from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from cpd import __version__, log
from cpd.commands import COMMANDS
from cpd.core.errors import CPDError, InputError
from cpd.core.responses import err


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpd", description="fused lasso change point toolkit")
    parser.add_argument("--version", action="version", version=f"cpd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for module in COMMANDS:
        module.register(sub)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except CPDError as exc:
        log.warning("%s failed: %s", args.command, exc.msg)
        return err(exc.msg, exit_code=exc.exit_code, code=exc.code, **exc.extra)
    except ValidationError as exc:
        first = exc.errors()[0]
        return err(f"{first['msg']}", exit_code=InputError.exit_code, code=InputError.code)


if __name__ == "__main__":
    sys.exit(main())
