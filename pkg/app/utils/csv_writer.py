"""
CSV Writer
Long layout (one CsvRow per line) or pivot layout (one grid point per line,
one quantity per column). Numbers use 10 significant digits.
"""
import csv
import sys
from contextlib import contextmanager
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, TextIO

from app.utils.validators import CsvRow

LONG_COLUMNS = ["p_i", "p_d", "quantity", "L", "value", "aux", "converged", "tol"]


def fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.10g}"
    if value is None:
        return ""
    return str(value)


@contextmanager
def _open(out: Optional[str]) -> Iterator[TextIO]:
    if out is None or out == "-":
        yield sys.stdout
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _label(row: CsvRow) -> str:
    if row.L is None:
        return row.quantity
    if row.quantity == "upper_L":
        return f"upper_L{row.L}"
    return f"{row.quantity}_L{row.L}"


def write_rows(rows: Iterable[CsvRow], out: Optional[str] = None, pivot: bool = False) -> int:
    """Sort by (p_i, p_d, quantity, L) and write; returns the number of data lines."""
    ordered = sorted(rows, key=CsvRow.sort_key)
    with _open(out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if not pivot:
            writer.writerow(LONG_COLUMNS)
            for row in ordered:
                writer.writerow([fmt(float(row.p_i)), fmt(float(row.p_d)), row.quantity, fmt(row.L),
                                 fmt(float(row.value)), row.aux, fmt(row.converged), fmt(float(row.tol))])
            return len(ordered)

        labels: List[str] = []
        table: Dict[tuple, Dict[str, float]] = {}
        for row in ordered:
            label = _label(row)
            if label not in labels:
                labels.append(label)
            table.setdefault((row.p_i, row.p_d), {})[label] = row.value
        writer.writerow(["p_i", "p_d"] + labels)
        for (p_i, p_d), values in table.items():
            writer.writerow([fmt(float(p_i)), fmt(float(p_d))] + [fmt(values.get(lb)) for lb in labels])
        return len(table)


def write_records(records: Sequence[Dict[str, Any]], columns: Sequence[str], out: Optional[str] = None) -> int:
    """Plain records (e.g. the B-sign map) in the given column order."""
    with _open(out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(columns))
        for record in records:
            writer.writerow([fmt(record.get(col)) for col in columns])
    return len(records)
