from __future__ import annotations

import argparse
from typing import List


def int_list(raw: str) -> List[int]:
    try:
        return [int(c) for c in raw.replace(";", ",").split(",") if c.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {raw!r}")


def level_list(raw: str):
    """`0,2,5` gives scalar levels, `0,0;1,1` gives one vector per segment."""
    try:
        if ";" in raw:
            return [[float(c) for c in seg.split(",")] for seg in raw.split(";") if seg.strip()]
        return [float(c) for c in raw.split(",") if c.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed levels {raw!r}")
