"""CSV output for result tables.

Floats are written with `repr`, the shortest decimal string that round-trips
to the same 64-bit value, so reruns with the same seed give identical bytes.
"""

import csv
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np


def format_cell(value) -> str:
    if isinstance(value, bool | np.bool_):
        return "true" if value else "false"
    if isinstance(value, float | np.floating):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    if hasattr(value, "value"):
        # Enums
        return str(value.value)
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Write `rows` under a header row naming `columns`."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"Row has {len(row)} cells, expected {len(columns)}.")
            writer.writerow([format_cell(v) for v in row])
    return path


def read_csv(path: Path) -> list[dict[str, str]]:
    with Path(path).open(newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))
