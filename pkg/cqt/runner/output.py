"""CSV / JSON writers for result tables."""

from __future__ import annotations

import json
import logging
import sys
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import IO, Any

import pandas as pd

logger = logging.getLogger(__name__)


def format_value(value: Any) -> str:
    """Cell text; floats carry 17 significant digits so they re-parse exactly."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _json_value(value: Any) -> Any:
    if hasattr(value, "item"):  # numpy scalars
        value = value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def write_csv(rows: Iterable[dict[str, Any]], columns: Sequence[str], stream: IO[str]) -> None:
    # cells are pre-formatted text so pandas never re-renders a float
    cells = [[format_value(row.get(c)) for c in columns] for row in rows]
    table = pd.DataFrame(cells, columns=list(columns), dtype=object)
    table.to_csv(stream, index=False, lineterminator="\n")


def write_json(rows: Iterable[dict[str, Any]], columns: Sequence[str], stream: IO[str]) -> None:
    records = [{c: _json_value(row.get(c)) for c in columns} for row in rows]
    json.dump(records, stream, indent=2)
    stream.write("\n")


def write_rows(
    rows: Sequence[dict[str, Any]],
    columns: Sequence[str],
    path: str | Path | None,
    fmt: str = "csv",
) -> None:
    """Write a table to ``path`` (``-`` or None for stdout)."""
    writer = write_json if fmt == "json" else write_csv
    if path is None or str(path) == "-":
        writer(rows, columns, sys.stdout)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer(rows, columns, f)
    logger.info("Wrote %d rows to %s", len(rows), path)
