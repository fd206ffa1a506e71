"""Minimal deterministic SVG line plots of CSV columns.

The first column is the x axis; every other numeric column becomes one
polyline. Blank cells break nothing: the point is skipped.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

from .errors import Malformed

WIDTH, HEIGHT = 640, 400
MARGIN = (70, 20, 30, 50)      # left, right, top, bottom
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")

_UNITS = (("t_ms", "ms"), ("_dth", "rad/s"), ("_th", "rad"), ("_tau", "N·m"), ("ref_", "N·m"),
          ("env", "N·m"), ("epoch", "-"), ("loss", "-"))


def unit_of(name: str) -> str:
    for key, unit in _UNITS:
        if key in name:
            return unit
    return "-"


def read_series(path) -> tuple[str, list, dict]:
    """x name, x values, {column: [(x, y), ...]} from a CSV with a header row."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    except OSError as exc:
        raise Malformed(f"cannot read {path}: {exc}") from None
    if not rows or len(rows[0]) < 2:
        raise Malformed("need a header with an x column and at least one series")
    header, body = rows[0], rows[1:]
    series = {name: [] for name in header[1:]}
    xs = []
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise Malformed(f"expected {len(header)} fields, got {len(row)}", lineno)
        try:
            x = float(row[0])
        except ValueError:
            raise Malformed(f"non-numeric x value {row[0]!r}", lineno) from None
        xs.append(x)
        for name, cell in zip(header[1:], row[1:]):
            if cell.strip() == "":
                continue
            try:
                y = float(cell)
            except ValueError:
                raise Malformed(f"non-numeric value {cell!r} in {name}", lineno) from None
            if math.isfinite(y):
                series[name].append((x, y))
    series = {k: v for k, v in series.items() if v}
    if not series:
        raise Malformed("no data points to plot")
    return header[0], xs, series


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    out, v = [], start
    while v <= hi + 1e-12 * abs(hi) + 1e-300:
        out.append(v)
        v += step
    return out


def _num(v: float) -> str:
    return f"{v:.2f}"


def render_svg(x_name: str, series: dict, title: str = "", log_y: bool = False) -> str:
    pts = [p for s in series.values() for p in s]
    if log_y:
        if any(y <= 0 for _, y in pts):
            raise Malformed("log scale needs positive values")
        series = {k: [(x, math.log10(y)) for x, y in v] for k, v in series.items()}
        pts = [p for s in series.values() for p in s]
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    left, right, top, bottom = MARGIN
    pw, ph = WIDTH - left - right, HEIGHT - top - bottom

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + (1.0 - (y - y0) / (y1 - y0)) * ph

    units = sorted({unit_of(k) for k in series})
    y_label = ("log10 " if log_y else "") + ", ".join(units)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>']
    if title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="{top - 8}" text-anchor="middle">{_esc(title)}</text>')
    for v in _ticks(x0, x1):
        out.append(f'<text x="{_num(sx(v))}" y="{top + ph + 16}" text-anchor="middle">{v:g}</text>')
    for v in _ticks(y0, y1):
        out.append(f'<text x="{left - 6}" y="{_num(sy(v) + 4)}" text-anchor="end">{v:g}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle">'
               f'{_esc(x_name)} [{unit_of(x_name)}]</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.2f})">[{_esc(y_label)}]</text>')
    for i, (name, pts_i) in enumerate(series.items()):
        color = COLORS[i % len(COLORS)]
        coords = " ".join(f"{_num(sx(x))},{_num(sy(y))}" for x, y in pts_i)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{coords}"/>')
        out.append(f'<text x="{left + pw - 4}" y="{top + 14 + 13 * i}" text-anchor="end" '
                   f'fill="{color}">{_esc(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def emit_plot(csv_path, out_path, columns=None, title: str = "", log_y: bool = False) -> None:
    x_name, _, series = read_series(csv_path)
    if columns:
        missing = [c for c in columns if c not in series]
        if missing:
            raise Malformed(f"columns without data: {', '.join(missing)}")
        series = {c: series[c] for c in columns}
    Path(out_path).write_text(render_svg(x_name, series, title, log_y))
