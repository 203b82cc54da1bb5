"""Minimal standalone SVG line charts for classicality traces."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 800, 500
MARGIN = (60, 20, 20, 40)  # left, right, top, bottom
N_TICKS = 10
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2")


def _scale(lo: float, hi: float, a: float, b: float):
    span = hi - lo if hi > lo else 1.0
    return lambda v: a + (np.asarray(v) - lo) * (b - a) / span


def line_chart(x: np.ndarray, series: Sequence[tuple[str, np.ndarray]],
               x_label: str = "t", y_label: str = "") -> str:
    """One polyline per series over a shared x axis, with 10 ticks per axis."""
    left, right, top, bottom = MARGIN
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(y, dtype=float) for _, y in series]
    finite = np.concatenate([y[np.isfinite(y)] for y in ys]) if ys else np.zeros(1)
    ylo, yhi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if yhi == ylo:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    xlo, xhi = float(x.min()), float(x.max())
    sx = _scale(xlo, xhi, left, WIDTH - right)
    sy = _scale(ylo, yhi, HEIGHT - bottom, top)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
           f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<line x1="{left}" y1="{HEIGHT - bottom}" x2="{WIDTH - right}" '
           f'y2="{HEIGHT - bottom}" stroke="black"/>',
           f'<line x1="{left}" y1="{top}" x2="{left}" y2="{HEIGHT - bottom}" stroke="black"/>']
    for v in np.linspace(xlo, xhi, N_TICKS):
        px = float(sx(v))
        out.append(f'<line x1="{px:.2f}" y1="{HEIGHT - bottom}" x2="{px:.2f}" '
                   f'y2="{HEIGHT - bottom + 5}" stroke="black"/>')
        out.append(f'<text x="{px:.2f}" y="{HEIGHT - bottom + 17}" '
                   f'text-anchor="middle">{v:.4g}</text>')
    for v in np.linspace(ylo, yhi, N_TICKS):
        py = float(sy(v))
        out.append(f'<line x1="{left - 5}" y1="{py:.2f}" x2="{left}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{py + 4:.2f}" text-anchor="end">{v:.4g}</text>')
    out.append(f'<text x="{WIDTH - right}" y="{HEIGHT - 4}" text-anchor="end">'
               f'{escape(x_label)}</text>')
    if y_label:
        out.append(f'<text x="12" y="{top + 10}">{escape(y_label)}</text>')
    for i, ((name, _), y) in enumerate(zip(series, ys)):
        color = COLORS[i % len(COLORS)]
        ok = np.isfinite(y)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(sx(x[ok]), sy(y[ok])))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}">'
                   f'<title>{escape(name)}</title></polyline>')
        out.append(f'<text x="{WIDTH - right - 4}" y="{top + 14 * (i + 1)}" '
                   f'text-anchor="end" fill="{color}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
