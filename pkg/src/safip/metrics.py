"""Summary rows and point-cloud export for solve reports."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields
from typing import Iterable

import numpy as np

from .solver import SolveReport

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BUDGET = 2


@dataclass(frozen=True)
class TableRow:
    label: str
    dim: int
    n: int
    tol: float
    N: int
    C: float
    k: float
    p: int
    time_seconds: float
    ec: float
    solutions: int
    total_evals: int
    fill_distance: float | None = None
    budget_stopped: bool = False


TABLE_COLUMNS = [f.name for f in fields(TableRow)]


def to_table_row(report: SolveReport, label: str = "") -> TableRow:
    cfg = report.config
    fill = report.coverage.fill_distance if report.coverage is not None else None
    return TableRow(
        label=label, dim=report.dim, n=cfg.n, tol=cfg.tol, N=cfg.N, C=cfg.C, k=cfg.k, p=cfg.p,
        time_seconds=report.elapsed_seconds, ec=report.ec,
        solutions=len(report.solutions), total_evals=report.total_evals,
        fill_distance=fill, budget_stopped=report.budget_stopped,
    )


def _cell(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def format_table(rows: Iterable[TableRow], columns=None, header: bool = True) -> str:
    """TAB-separated rows in the given order, optionally with a header line."""
    columns = columns or TABLE_COLUMNS
    lines = ["\t".join(columns)] if header else []
    for row in rows:
        data = asdict(row) if isinstance(row, TableRow) else dict(row)
        lines.append("\t".join(_cell(data.get(c)) for c in columns))
    return "\n".join(lines) + "\n"


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def _json_float(x: float):
    # json writes repr(), the shortest string that round-trips the double
    x = float(x)
    return x if math.isfinite(x) else None


def points_header(dim: int, n_fields: int) -> list[str]:
    return [
        *(f"x{i + 1}" for i in range(dim)),
        *(f"res_{j + 1}" for j in range(n_fields)),
        "agg", "chain_id", "steps",
    ]


def export_points(report: SolveReport, fmt: str = "csv", sink=None, include_timing: bool = True) -> bytes:
    """Serialise the solutions of ``report`` as CSV or JSON.

    CSV columns are ``x1..xd, res_1..res_m, agg, chain_id, steps``; JSON is
    an object with ``metadata`` (config without ``threads``, EC, counts,
    optionally elapsed time) and ``solutions``.  Every float is written so it reads back bit-exact
    (17 significant digits in CSV, shortest round-trip repr in JSON).  ``sink`` may be
    a path or a binary file object.
    """
    m = len(report.field_names)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(points_header(report.dim, m))
        for s in report.solutions:
            writer.writerow([
                *(_g17(c) for c in s.point),
                *(_g17(r) for r in s.residuals.per_field),
                _g17(s.residuals.aggregated), s.chain_id, s.steps,
            ])
        data = buf.getvalue().encode("utf-8")
    elif fmt == "json":
        config = report.config.to_dict()
        # worker count never changes the results, so it is not part of them
        config.pop("threads")
        meta = {
            "config": config,
            "dim": report.dim,
            "fields": list(report.field_names),
            "ec": _json_float(report.ec),
            "total_evals": report.total_evals,
            "solutions": len(report.solutions),
            "chains_started": report.chains_started,
            "chains_died": report.chains_died,
            "rounds": report.rounds,
            "budget_stopped": report.budget_stopped,
        }
        if include_timing:
            meta["elapsed_seconds"] = report.elapsed_seconds
        if report.coverage is not None:
            meta["coverage"] = {k: _json_float(v) for k, v in asdict(report.coverage).items()}
        sols = [
            {
                "x": [_json_float(c) for c in s.point],
                "res": [_json_float(r) for r in s.residuals.per_field],
                "agg": _json_float(s.residuals.aggregated),
                "chain_id": s.chain_id,
                "steps": s.steps,
            }
            for s in report.solutions
        ]
        data = (json.dumps({"metadata": meta, "solutions": sols}, indent=1) + "\n").encode("utf-8")
    else:
        raise ValueError(f"unknown export format {fmt!r}; use 'csv' or 'json'")
    if sink is not None:
        if hasattr(sink, "write"):
            sink.write(data)
        else:
            with open(sink, "wb") as fh:
                fh.write(data)
    return data


def read_points_csv(source) -> dict:
    """Parse an exported CSV back into column arrays (floats and ints)."""
    if hasattr(source, "read"):
        text = source.read()
        text = text.decode("utf-8") if isinstance(text, bytes) else text
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(header):
        col = [r[j] for r in body]
        if name in ("chain_id", "steps"):
            out[name] = np.array([int(v) for v in col], dtype=int)
        else:
            out[name] = np.array([float(v) for v in col], dtype=float)
    return out
