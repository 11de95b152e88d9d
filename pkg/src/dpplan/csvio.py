"""Strict CSV loading against a typed schema, and CSV output."""
from __future__ import annotations

import csv
import math
from collections import namedtuple
from typing import Iterable, List, Mapping, Optional, Sequence, TextIO


class CsvError(ValueError):
    """A malformed CSV file; ``line`` is the 1-based line number of the problem."""

    def __init__(self, path: str, line: int, message: str):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


def load_csv(path: str, schema: Mapping[str, type], row_type=None) -> List:
    """Read ``path`` into a list of named tuples.

    The header must list exactly the schema's columns, in order; each cell is
    converted with the schema's type (``int``, ``float`` or ``str``). An empty
    data section is valid. Raises :class:`CsvError` naming the line for any
    malformed row and ``OSError`` for I/O problems.
    """
    names = list(schema)
    types = [schema[n] for n in names]
    row_type = row_type or namedtuple("Row", names)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise CsvError(path, 1, "missing header")
        if [h.strip() for h in header] != names:
            raise CsvError(path, 1, f"expected header {','.join(names)}, got {','.join(header)}")
        rows = []
        for record in reader:
            line = reader.line_num
            if not record:
                continue
            if len(record) != len(names):
                raise CsvError(path, line, f"expected {len(names)} fields, got {len(record)}")
            cells = []
            for name, kind, raw in zip(names, types, record):
                try:
                    cells.append(kind(raw.strip()) if kind is not str else raw)
                except ValueError:
                    raise CsvError(path, line, f"column {name!r}: cannot read {raw!r} as {kind.__name__}") from None
            rows.append(row_type(*cells))
    return rows


def format_number(x) -> str:
    """Shortest text that reads back to the same number."""
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isfinite(x) and x == int(x) and abs(x) < 1e16:
            return str(int(x))
        return repr(x)
    return str(x)


def write_csv(out: TextIO, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(x) for x in row])


def write_rows(path: str, rows: Sequence, header: Optional[Sequence[str]] = None) -> None:
    """Write named tuples (or plain sequences with an explicit header) to ``path``."""
    if header is None:
        header = rows[0]._fields if rows else ()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        write_csv(fh, header, rows)
