from __future__ import annotations

import csv
from pathlib import Path
from typing import Any, Iterable, Iterator, List, Sequence, Tuple

from cpd.core.errors import InputError


def write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(list(header))
            for r in rows:
                writer.writerow(list(r))
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror or exc}", path=str(path)) from exc
    return path


def read_rows(path: str | Path) -> Tuple[List[str], Iterator[Tuple[int, List[str]]]]:
    """Return the header and (1-based line number, cells) pairs for the data rows."""
    path = Path(path)
    try:
        with path.open("r", newline="", encoding="utf-8") as fh:
            lines = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}", path=str(path)) from exc

    if not lines:
        raise InputError(f"{path}: empty file, header row expected", path=str(path), line=1)

    header = [h.strip() for h in lines[0]]

    def gen():
        for lineno, cells in enumerate(lines[1:], start=2):
            if not cells or all(c.strip() == "" for c in cells):
                continue
            if len(cells) != len(header):
                raise InputError(
                    f"{path}:{lineno}: expected {len(header)} columns, got {len(cells)}",
                    path=str(path),
                    line=lineno,
                )
            yield lineno, [c.strip() for c in cells]

    return header, gen()
