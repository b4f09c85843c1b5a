"""Minimal self-contained SVG line plots with error bars.

Output depends only on the input numbers (fixed formatting, no timestamps),
so identical series give byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

from .errors import ConfigurationError

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 150, 40, 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

Series = tuple[Sequence[float], Sequence[float], Sequence[float] | None]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step - 1e-9) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 12))
        v += step
    return out


def render_svg(
    series: Mapping[str, Series],
    *,
    xlabel: str = "x",
    ylabel: str = "y",
    title: str = "",
    y_range: tuple[float, float] | None = None,
) -> str:
    pts = [(x, y, (e[i] if e is not None else 0.0))
           for xs, ys, e in series.values() for i, (x, y) in enumerate(zip(xs, ys))]
    if not pts:
        raise ConfigurationError("nothing to plot: every series is empty")
    for xs, ys, e in series.values():
        if len(xs) != len(ys) or (e is not None and len(e) != len(xs)):
            raise ConfigurationError("series x, y and yerr must have equal lengths")
    xmin = min(p[0] for p in pts)
    xmax = max(p[0] for p in pts)
    if xmax == xmin:
        xmin, xmax = xmin - 0.5, xmax + 0.5
    if y_range is None:
        ymin = min(p[1] - p[2] for p in pts)
        ymax = max(p[1] + p[2] for p in pts)
        if ymax == ymin:
            ymin, ymax = ymin - 0.5, ymax + 0.5
    else:
        ymin, ymax = y_range
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B
    sx = lambda x: MARGIN_L + (x - xmin) / (xmax - xmin) * pw  # noqa: E731
    sy = lambda y: MARGIN_T + (ymax - y) / (ymax - ymin) * ph  # noqa: E731

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="{MARGIN_T - 15}" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for t in _ticks(xmin, xmax):
        x = sx(t)
        out.append(f'<line x1="{_fmt(x)}" y1="{MARGIN_T + ph}" x2="{_fmt(x)}" y2="{MARGIN_T + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(x)}" y="{MARGIN_T + ph + 20}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(ymin, ymax):
        y = sy(t)
        out.append(f'<line x1="{MARGIN_L - 5}" y1="{_fmt(y)}" x2="{MARGIN_L}" y2="{_fmt(y)}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{_fmt(y + 4)}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{MARGIN_L + pw / 2:.2f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{MARGIN_T + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {MARGIN_T + ph / 2:.2f})">{escape(ylabel)}</text>')

    for n, (name, (xs, ys, err)) in enumerate(series.items()):
        color = COLORS[n % len(COLORS)]
        order = sorted(range(len(xs)), key=lambda i: xs[i])
        if len(order) > 1:
            path = " ".join(f"{_fmt(sx(xs[i]))},{_fmt(sy(ys[i]))}" for i in order)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for i in order:
            cx, cy = sx(xs[i]), sy(ys[i])
            if err is not None and err[i] > 0:
                out.append(f'<line x1="{_fmt(cx)}" y1="{_fmt(sy(ys[i] - err[i]))}" x2="{_fmt(cx)}" '
                           f'y2="{_fmt(sy(ys[i] + err[i]))}" stroke="{color}"/>')
            out.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="3" fill="{color}"/>')
        ly = MARGIN_T + 15 + 18 * n
        out.append(f'<line x1="{WIDTH - MARGIN_R + 10}" y1="{ly}" x2="{WIDTH - MARGIN_R + 30}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{WIDTH - MARGIN_R + 35}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(series: Mapping[str, Series], svg_path: str | Path, **kwargs) -> Path:
    """Write the plot to ``svg_path``; see :func:`render_svg` for options."""
    text = render_svg(series, **kwargs)
    path = Path(svg_path)
    path.write_text(text, encoding="utf-8")
    return path
