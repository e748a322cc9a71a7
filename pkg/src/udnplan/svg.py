"""Minimal self-contained SVG line/marker plots.

Output is a pure function of the inputs (fixed number formatting, no
random ids), apart from an optional timestamp comment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from xml.sax.saxutils import escape

PALETTE = ("#1f4e9c", "#2e8b3a", "#c0392b", "#8e44ad", "#d68910", "#17202a")
WIDTH, HEIGHT = 640, 440
MARGIN = dict(left=72, right=20, top=40, bottom=56)


@dataclass
class Series:
    label: str
    x: list
    y: list
    markers: bool = False
    dashed: bool = False
    color: str | None = None


@dataclass
class Plot:
    title: str
    xlabel: str
    ylabel: str
    series: list = field(default_factory=list)
    logx: bool = False
    logy: bool = False


def _finite(v, log):
    return v is not None and math.isfinite(v) and (not log or v > 0)


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        return [10.0**k for k in range(a, b + 1) if lo * (1 - 1e-9) <= 10.0**k <= hi * (1 + 1e-9)] or [lo, hi]
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / 5)) if span > 0 else 1.0
    for m in (1, 2, 5, 10):
        if span / (m * step) <= 6:
            step *= m
            break
    first = math.ceil(lo / step) * step
    return [first + i * step for i in range(int((hi - first) / step + 1e-9) + 1)]


def _fmt(v):
    return f"{v:.6g}"


def render(plot: Plot, timestamp=True) -> str:
    pts = [(x, y) for s in plot.series for x, y in zip(s.x, s.y)
           if _finite(x, plot.logx) and _finite(y, plot.logy)]
    if not pts:
        pts = [(1.0, 1.0)]
    xs, ys = zip(*pts)
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    if x0 == x1:
        x0, x1 = (x0 / 2, x0 * 2) if plot.logx else (x0 - 1, x1 + 1)
    if y0 == y1:
        y0, y1 = (y0 / 2, y0 * 2) if plot.logy else (y0 - 1, y1 + 1)
    if not plot.logy:
        pad = 0.05 * (y1 - y0)
        y0, y1 = y0 - pad, y1 + pad

    L, R, T, B = MARGIN["left"], WIDTH - MARGIN["right"], MARGIN["top"], HEIGHT - MARGIN["bottom"]

    def tx(v):
        a, b, v = (math.log10(x0), math.log10(x1), math.log10(v)) if plot.logx else (x0, x1, v)
        return L + (v - a) / (b - a) * (R - L)

    def ty(v):
        a, b, v = (math.log10(y0), math.log10(y1), math.log10(v)) if plot.logy else (y0, y1, v)
        return B - (v - a) / (b - a) * (B - T)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
    ]
    if timestamp:
        out.append(f"<!-- generated {datetime.now(timezone.utc).isoformat(timespec='seconds')} -->")
    out.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    out.append(f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(plot.title)}</text>')
    for v in _ticks(x0, x1, plot.logx):
        X = tx(v)
        out.append(f'<line x1="{X:.2f}" y1="{T}" x2="{X:.2f}" y2="{B}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{X:.2f}" y="{B + 16}" text-anchor="middle">{_fmt(v)}</text>')
    for v in _ticks(y0, y1, plot.logy):
        Y = ty(v)
        out.append(f'<line x1="{L}" y1="{Y:.2f}" x2="{R}" y2="{Y:.2f}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{L - 6}" y="{Y + 4:.2f}" text-anchor="end">{_fmt(v)}</text>')
    out.append(f'<rect x="{L}" y="{T}" width="{R - L}" height="{B - T}" fill="none" stroke="black"/>')
    out.append(f'<text x="{(L + R) / 2:.1f}" y="{HEIGHT - 14}" text-anchor="middle">{escape(plot.xlabel)}</text>')
    out.append(f'<text x="16" y="{(T + B) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {(T + B) / 2:.1f})">{escape(plot.ylabel)}</text>')

    for i, s in enumerate(plot.series):
        color = s.color or PALETTE[i % len(PALETTE)]
        seg = [(tx(x), ty(y)) for x, y in zip(s.x, s.y) if _finite(x, plot.logx) and _finite(y, plot.logy)]
        if s.markers:
            for X, Y in seg:
                out.append(f'<circle cx="{X:.2f}" cy="{Y:.2f}" r="3" fill="none" stroke="{color}"/>')
        elif len(seg) > 1:
            path = " ".join(f"{X:.2f},{Y:.2f}" for X, Y in seg)
            dash = ' stroke-dasharray="6 4"' if s.dashed else ""
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>')
        ly = T + 14 + 16 * i
        out.append(f'<line x1="{R - 150}" y1="{ly}" x2="{R - 128}" y2="{ly}" stroke="{color}"'
                   + (' stroke-dasharray="6 4"' if s.dashed else "") + "/>")
        out.append(f'<text x="{R - 122}" y="{ly + 4}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
