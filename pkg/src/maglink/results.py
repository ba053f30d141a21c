"""Tabular result containers and deterministic writers.

CSV carries metadata as leading '# key = value' comment lines (sorted by
key, no timestamps or hostnames: identical inputs must give byte-identical
files).  Floats are written with %.17g so a round-trip preserves every
bit.  JSON mirrors the same {meta, columns, rows} structure.  The gnuplot
emitters write small plot scripts next to the data; nothing here ever
executes gnuplot.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

from .params import ValidationError


def _fmt_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return "%.17g" % v
    return str(v)


@dataclass(frozen=True)
class ResultTable:
    """Column-named rows plus free-form metadata."""

    columns: tuple
    rows: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        cols = tuple(str(c) for c in self.columns)
        if len(set(cols)) != len(cols):
            raise ValidationError([f"duplicate column names in {cols}"])
        rows = tuple(
            tuple(v.item() if hasattr(v, "item") else v for v in r)
            for r in self.rows)
        for i, r in enumerate(rows):
            if len(r) != len(cols):
                raise ValidationError(
                    [f"row {i} has {len(r)} cells, expected {len(cols)}"])
        meta = {k: (v.item() if hasattr(v, "item") else v)
                for k, v in self.meta.items()}
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "meta", meta)

    def column(self, name: str) -> list:
        if name not in self.columns:
            raise ValidationError([f"no column {name!r} in {self.columns}"])
        k = self.columns.index(name)
        return [r[k] for r in self.rows]


def write_csv(table: ResultTable, path: str) -> None:
    with open(path, "w", newline="") as fh:
        for key in sorted(table.meta):
            fh.write(f"# {key} = {_fmt_cell(table.meta[key])}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.columns)
        for row in table.rows:
            w.writerow([_fmt_cell(v) for v in row])


def _parse_cell(s: str):
    if s == "true":
        return True
    if s == "false":
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def read_csv(path: str) -> ResultTable:
    """Inverse of write_csv; numbers come back as int or float."""
    meta = {}
    body = io.StringIO()
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                meta[key.strip()] = _parse_cell(val.strip())
            else:
                body.write(line)
    body.seek(0)
    reader = csv.reader(body)
    try:
        columns = tuple(next(reader))
    except StopIteration:
        raise ValidationError([f"{path} has no header row"]) from None
    rows = tuple(tuple(_parse_cell(c) for c in row) for row in reader if row)
    return ResultTable(columns=columns, rows=rows, meta=meta)


def write_json(table: ResultTable, path: str) -> None:
    doc = {"meta": {k: table.meta[k] for k in sorted(table.meta)},
           "columns": list(table.columns),
           "rows": [list(r) for r in table.rows]}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def gnuplot_series(data_csv: str, path: str, x: str, ys: list[str],
                   title: str, xlabel: str, ylabel: str) -> None:
    """Line plot of columns ys against column x from a CSV written here."""
    cols = {name: i + 1 for i, name in enumerate(_csv_columns(data_csv))}
    lines = [
        "set datafile separator ','",
        "set datafile commentschars '#'",
        f"set title '{title}'",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
        "set key outside",
        "set grid",
    ]
    plots = [f"'{_basename(data_csv)}' skip 1 using {cols[x]}:{cols[y]} "
             f"with lines title '{y}'" for y in ys]
    lines.append("plot " + ", \\\n     ".join(plots))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def gnuplot_heatmap(data_csv: str, path: str, x: str, y: str, z: str,
                    title: str, xlabel: str, ylabel: str,
                    nx: int | None = None, ny: int | None = None) -> None:
    """Heat map for a long-format (x, y, z) table with x varying slowest.

    nx/ny are the grid point counts; gnuplot needs them (dgrid3d) to
    rebuild a surface from the flat table.
    """
    cols = {name: i + 1 for i, name in enumerate(_csv_columns(data_csv))}
    lines = [
        "set datafile separator ','",
        "set datafile commentschars '#'",
        f"set title '{title}'",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
        "set view map",
    ]
    if nx and ny:
        lines.append(f"set dgrid3d {ny},{nx}")
    lines.append(f"splot '{_basename(data_csv)}' skip 1 using "
                 f"{cols[x]}:{cols[y]}:{cols[z]} with pm3d notitle")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _basename(path: str) -> str:
    import os
    return os.path.basename(path)


def _csv_columns(path: str) -> tuple:
    with open(path, newline="") as fh:
        for line in fh:
            if not line.startswith("#"):
                return tuple(next(csv.reader([line])))
    raise ValidationError([f"{path} has no header row"])
