"""CSV and SVG emission for sweep tables; every file is written atomically."""
from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from html import escape
from pathlib import Path
from typing import Sequence

from .sweep import SweepRecord


def write_atomic(path: str | Path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def fmt(x: float) -> str:
    if isinstance(x, int):
        return str(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.9g}"


def csv_columns(n_pairs: int) -> list[str]:
    """Fixed column order; for two pairs this is the documented 16-column layout."""
    idx = range(1, n_pairs + 1)
    return (
        [f"c{j}" for j in idx]
        + ["omega_mhz", "gcs_ratio"]
        + [f"g{j}_mhz" for j in idx]
        + [f"mu{j}_mhz" for j in idx]
        + ["t_op_ns", "F_joint"]
        + [f"F_pair{j}" for j in idx]
        + ["trace_error", "min_eig", "steps", "wall_s", "validity", "note"]
    )


def record_row(rec: SweepRecord, timing: bool = False) -> list[str]:
    return (
        [fmt(c) for c in rec.c]
        + [fmt(rec.omega_mhz), fmt(rec.gcs_ratio)]
        + [fmt(g) for g in rec.g_mhz]
        + [fmt(m) for m in rec.mu_mhz]
        + [fmt(rec.t_op_ns), fmt(rec.F_joint)]
        + [fmt(f) for f in rec.F_pair]
        + [
            fmt(rec.trace_error),
            fmt(rec.min_eigenvalue),
            str(rec.steps),
            fmt(rec.wall_seconds if timing else 0.0),
            rec.validity,
            rec.note,
        ]
    )


def records_to_csv(records: Sequence[SweepRecord], timing: bool = False) -> str:
    """CSV text. ``wall_s`` is written as 0 unless ``timing`` so reruns are byte-identical."""
    n = len(records[0].c) if records else 2
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_columns(n))
    for rec in records:
        w.writerow(record_row(rec, timing))
    return buf.getvalue()


def write_csv(records: Sequence[SweepRecord], path: str | Path, timing: bool = False) -> None:
    write_atomic(path, records_to_csv(records, timing))


def _colour(v: float, lo: float, hi: float) -> str:
    if not math.isfinite(v):
        return "#bbbbbb"
    s = 0.0 if hi <= lo else min(max((v - lo) / (hi - lo), 0.0), 1.0)
    # dark blue -> yellow
    r = int(round(20 + s * (250 - 20)))
    g = int(round(30 + s * (220 - 30)))
    b = int(round(110 + s * (40 - 110)))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_svg(
    records: Sequence[SweepRecord],
    x_values: Sequence[float],
    y_values: Sequence[float],
    x_label: str,
    y_label: str,
    value: str = "F_joint",
    title: str = "",
) -> str:
    """Grid of coloured cells, one per record; ``record.index`` is ``(y, x)``."""
    cell, left, top = 28, 70, 40
    nx, ny = len(x_values), len(y_values)
    width, height = left + nx * cell + 120, top + ny * cell + 60
    vals = [getattr(r, value) for r in records]
    finite = [v for v in vals if math.isfinite(v)]
    lo, hi = (min(finite), max(finite)) if finite else (0.0, 1.0)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="10">',
        f'<text x="{left}" y="20" font-size="13">{escape(title or value)}</text>',
    ]
    for rec, v in zip(records, vals):
        iy, ix = rec.index
        x = left + ix * cell
        y = top + (ny - 1 - iy) * cell
        out.append(
            f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{_colour(v, lo, hi)}">'
            f"<title>{escape(value)}={fmt(v)}</title></rect>"
        )
    for ix, xv in enumerate(x_values):
        out.append(
            f'<text x="{left + ix * cell + cell / 2}" y="{top + ny * cell + 14}" text-anchor="middle">{fmt(round(xv, 3))}</text>'
        )
    for iy, yv in enumerate(y_values):
        out.append(
            f'<text x="{left - 6}" y="{top + (ny - 1 - iy) * cell + cell / 2 + 4}" text-anchor="end">{fmt(round(yv, 3))}</text>'
        )
    out.append(f'<text x="{left + nx * cell / 2}" y="{top + ny * cell + 34}" text-anchor="middle">{escape(x_label)}</text>')
    out.append(
        f'<text x="16" y="{top + ny * cell / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ny * cell / 2})">{escape(y_label)}</text>'
    )
    bar_x = left + nx * cell + 20
    for k in range(10):
        s = k / 9
        out.append(
            f'<rect x="{bar_x}" y="{top + (9 - k) * 12}" width="14" height="12" fill="{_colour(lo + s * (hi - lo), lo, hi)}"/>'
        )
    out.append(f'<text x="{bar_x + 18}" y="{top + 10}">{fmt(round(hi, 4))}</text>')
    out.append(f'<text x="{bar_x + 18}" y="{top + 120}">{fmt(round(lo, 4))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_heatmap(records, x_values, y_values, x_label, y_label, path, value="F_joint", title="") -> None:
    write_atomic(path, heatmap_svg(records, x_values, y_values, x_label, y_label, value, title))
