from __future__ import annotations

import os
from pathlib import Path
from typing import Final, List


BASE_DIR: Final = Path(__file__).resolve().parent.parent


def _detect_data_root() -> Path:
    if env_root := os.getenv("CPD_DATA_ROOT"):
        return Path(env_root).expanduser().resolve()

    return (BASE_DIR.parent / "data").resolve()


DATA_ROOT: Final = _detect_data_root()


def _mkdir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except PermissionError as exc:
        raise PermissionError(
            f"Cannot create directory {path}; "
            f"set CPD_DATA_ROOT to a writable location."
        ) from exc
    return path


_WRITABLE_SUBDIRS: Final[List[str]] = ["logs", "results"]

for sub in _WRITABLE_SUBDIRS:
    _mkdir(DATA_ROOT / sub)


LOG_DIR: Final = DATA_ROOT / "logs"
RESULTS_DIR: Final = DATA_ROOT / "results"

__all__ = [
    "BASE_DIR", "DATA_ROOT",
    "LOG_DIR", "RESULTS_DIR",
]
