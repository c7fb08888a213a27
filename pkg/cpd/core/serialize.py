from __future__ import annotations

import dataclasses
import math
from typing import Any, Dict

import numpy as np


def fmt_float(v: float) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def parse_float(s: str) -> float:
    return float(s.strip())


def to_jsonable(x: Any) -> Any:
    if isinstance(x, (np.bool_, bool)):
        return bool(x)

    if isinstance(x, (np.integer,)):
        return int(x)

    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else fmt_float(v)

    if isinstance(x, np.ndarray):
        return to_jsonable(x.tolist())

    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        return to_jsonable({f.name: getattr(x, f.name) for f in dataclasses.fields(x)})

    if hasattr(x, "model_dump"):
        return to_jsonable(x.model_dump())

    if isinstance(x, (list, tuple, set, frozenset)):
        return [to_jsonable(i) for i in x]

    if isinstance(x, dict):
        out: Dict[str, Any] = {}
        for k, v in x.items():
            out[str(k)] = to_jsonable(v)
        return out

    return x
