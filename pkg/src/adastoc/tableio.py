"""Deterministic CSV output.

All experiment commands write through these helpers so that identical inputs
produce byte-identical files: floats are rendered in full-precision scientific
notation, integers verbatim, booleans as 0/1.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Sequence


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int,)):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17e")
    return str(value)


def format_row(cells: Sequence) -> str:
    return ",".join(format_cell(c) for c in cells)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    lines = [",".join(header)]
    lines.extend(format_row(r) for r in rows)
    path.write_text("\n".join(lines) + "\n")
