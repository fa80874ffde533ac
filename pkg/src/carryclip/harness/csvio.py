"""CSV persistence with fixed column order and round-trippable floats.

Floats are rendered with 17 significant digits so the exact double survives
parse -> format -> parse.  Rows are dicts that must match the declared
header exactly.
"""

from __future__ import annotations

import csv
import os
from typing import Iterable, Mapping

__all__ = ["format_value", "write_csv", "read_csv"]


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(path, header: list[str], rows: Iterable[Mapping[str, object]]) -> str:
    path = os.fspath(path)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            if set(row.keys()) != set(header):
                missing = set(header) - set(row.keys())
                extra = set(row.keys()) - set(header)
                raise ValueError(f"row does not match header (missing {missing}, extra {extra})")
            writer.writerow([format_value(row[col]) for col in header])
    return path


def read_csv(path) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV") from None
        rows = [dict(zip(header, row)) for row in reader]
    return header, rows
