"""Small shared helpers for writing CSV/JSON artifacts."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence


def fmt17(x: float) -> str:
    """Format a float with 17 significant digits (lossless float64 round trip)."""
    return format(float(x), ".17g")


def format_cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int,)):
        return str(value)
    if isinstance(value, str):
        return value
    return fmt17(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_cell(v) for v in row) + "\n")


def dump_json(path, obj) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
