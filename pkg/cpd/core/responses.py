from __future__ import annotations

import json
import sys
from typing import Any, Dict, Optional

from cpd.core.serialize import to_jsonable


def ok(data: Optional[Dict[str, Any]] = None, exit_code: int = 0) -> int:
    payload: Dict[str, Any] = {"ok": True}
    if data:
        payload.update(data)
    print(json.dumps(to_jsonable(payload), sort_keys=True), file=sys.stdout)
    return exit_code


def err(msg: str, exit_code: int = 2, **extra) -> int:
    payload: Dict[str, Any] = {"ok": False, "error": msg}
    payload.update(extra)
    print(json.dumps(to_jsonable(payload), sort_keys=True), file=sys.stderr)
    return exit_code
