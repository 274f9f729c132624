"""Minimal self-contained SVG line and scatter plots for result tables."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 160, 30, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _series_for(table):
    """Pick (title, x label, y label, series, log_x) for the known table schemas."""
    cols = table.schema
    if "log10_loss_warm" in cols:
        it = table.column("iter")
        series = []
        for name, label in (("log10_loss_warm", "warm start"), ("log10_loss_random", "random init")):
            pts = [(x, y) for x, y in zip(it, table.column(name))
                   if y is not None and math.isfinite(y)]
            if pts:
                series.append((label, pts))
        return "empirical loss", "iteration", "log10 loss", series, False
    if "success_count" in cols:
        return ("recovery probability", "N/d", "success fraction",
                _by_d(table, lambda r: r[3] / r[4]), False)
    if "avg_error" in cols:
        return "average estimation error", "N/d", "log10 avg error", \
            _by_d(table, lambda r: math.log10(r[3]) if r[3] > 0 else None), True
    if "grad_norm" in cols:
        pts = [(t, math.log10(v)) for t, v in zip(table.column("iter"), table.column("loss")) if v > 0]
        return "training loss", "iteration", "log10 loss", [("loss", pts)], False
    raise ValueError(f"no plot layout for columns {cols}")


def _by_d(table, value):
    groups = {}
    for r in table.rows:
        v = value(r)
        if v is not None and math.isfinite(v):
            groups.setdefault(r[0], []).append((r[2], v))
    return [(f"d = {d}", pts) for d, pts in groups.items()]


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 12))
        v += step
    return out


def _fmt(v):
    return f"{v:g}"


def emit_plot(table, kind: str = "line") -> str:
    """Render ``table`` as an SVG document; the config echo goes into a comment."""
    if kind not in ("line", "scatter"):
        raise ValueError("kind must be 'line' or 'scatter'")
    if not table.rows:
        raise ValueError("cannot plot an empty table")
    title, xlabel, ylabel, series, log_x = _series_for(table)
    series = [(lab, sorted(pts)) for lab, pts in series if pts]
    if not series:
        raise ValueError("table has no finite values to plot")
    tx = (lambda x: math.log10(x)) if log_x else (lambda x: x)
    xs = [tx(x) for _, pts in series for x, _ in pts]
    ys = [y for _, pts in series for _, y in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(x):
        return LEFT + (tx(x) - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + (1 - (y - y0) / (y1 - y0)) * ph

    comment = "\n".join(table.provenance()).replace("--", "- -")
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f"<!--\n{escape(comment)}\n-->",
           f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{LEFT + pw / 2:.1f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        x = LEFT + (t - x0) / (x1 - x0) * pw
        label = _fmt(10 ** t) if log_x else _fmt(t)
        out.append(f'<line x1="{x:.1f}" y1="{TOP + ph}" x2="{x:.1f}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.1f}" y="{TOP + ph + 18}" text-anchor="middle">{label}</text>')
    for t in _ticks(y0, y1):
        y = py(t)
        out.append(f'<line x1="{LEFT - 5}" y1="{y:.1f}" x2="{LEFT}" y2="{y:.1f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.1f}" text-anchor="end">{_fmt(t)}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {TOP + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (label, pts) in enumerate(series):
        color = COLORS[i % len(COLORS)]
        if kind == "line":
            path = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{path}"/>')
        else:
            for x, y in pts:
                out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.5" fill="{color}"/>')
        ly = TOP + 16 + 18 * i
        lx = LEFT + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
