"""Minimal standalone SVG line charts.

Emits self-contained SVG text so consumers need no plotting stack; output is
a pure function of the data, which keeps run artifacts diffable.
"""

from __future__ import annotations

import math
from pathlib import Path

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 640, 400
_ML, _MR, _MT, _MB = 60, 16, 34, 44


def _fmt(v: float) -> str:
    return f"{v:g}"


def _finite_pairs(xs, ys):
    return [(x, y) for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def line_chart(series, title: str, path, x_label: str = "", y_label: str = "") -> None:
    """Write a line chart for [(label, xs, ys), ...] to an SVG file."""
    cleaned = [(label, _finite_pairs(xs, ys)) for label, xs, ys in series]
    cleaned = [(label, pts) for label, pts in cleaned if pts]
    if not cleaned:
        raise ValueError("line_chart needs at least one finite data point")

    all_x = [x for _, pts in cleaned for x, _ in pts]
    all_y = [y for _, pts in cleaned for _, y in pts]
    x_lo, x_hi = min(all_x), max(all_x)
    y_lo, y_hi = min(all_y), max(all_y)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        pad = abs(y_lo) * 0.05 + 0.5
        y_lo, y_hi = y_lo - pad, y_hi + pad

    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def sx(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * pw

    def sy(y):
        return _MT + ph - (y - y_lo) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_W} {_H}" '
        f'font-family="sans-serif" font-size="11">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
    ]
    # axes
    out.append(
        f'<line x1="{_ML}" y1="{_MT + ph}" x2="{_ML + pw}" y2="{_MT + ph}" stroke="black"/>'
    )
    out.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_MT + ph}" stroke="black"/>')
    for t in _ticks(x_lo, x_hi):
        px = sx(t)
        out.append(
            f'<line x1="{px:.1f}" y1="{_MT + ph}" x2="{px:.1f}" y2="{_MT + ph + 4}" stroke="black"/>'
        )
        out.append(
            f'<text x="{px:.1f}" y="{_MT + ph + 16}" text-anchor="middle">{_fmt(t)}</text>'
        )
    for t in _ticks(y_lo, y_hi):
        py = sy(t)
        out.append(f'<line x1="{_ML - 4}" y1="{py:.1f}" x2="{_ML}" y2="{py:.1f}" stroke="black"/>')
        out.append(
            f'<text x="{_ML - 7}" y="{py + 3.5:.1f}" text-anchor="end">{_fmt(t)}</text>'
        )
    if x_label:
        out.append(
            f'<text x="{_ML + pw / 2:.1f}" y="{_H - 8}" text-anchor="middle">{x_label}</text>'
        )
    if y_label:
        out.append(
            f'<text x="14" y="{_MT + ph / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 14 {_MT + ph / 2:.1f})">{y_label}</text>'
        )
    # series
    for i, (label, pts) in enumerate(cleaned):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = _MT + 14 + 14 * i
        out.append(
            f'<line x1="{_ML + pw - 110}" y1="{ly - 4}" x2="{_ML + pw - 90}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        out.append(f'<text x="{_ML + pw - 85}" y="{ly}">{label}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
