"""Tiny SVG line/scatter chart emitter.

Deliberately minimal: linear axes, ticks, polyline series, point
markers, and a legend. Output is well-formed XML with no external
dependencies.
"""

from dataclasses import dataclass
from xml.sax.saxutils import escape

PALETTE = ("#d95f02", "#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


@dataclass
class Series:
    label: str
    xs: list
    ys: list
    draw_line: bool = True
    draw_points: bool = True


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def render_chart(series: list[Series], title: str = "", x_label: str = "",
                 y_label: str = "", width: int = 640, height: int = 420) -> str:
    pad_left, pad_right, pad_top, pad_bottom = 70, 20, 40, 55
    plot_w = width - pad_left - pad_right
    plot_h = height - pad_top - pad_bottom

    xs_all = [x for s in series for x in s.xs]
    ys_all = [y for s in series for y in s.ys]
    if not xs_all:
        xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    y_margin = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - y_margin, y_hi + y_margin

    def sx(x):
        return pad_left + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y):
        return pad_top + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{pad_left}" y="{pad_top}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#444"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" '
                   f'font-size="15">{escape(title)}</text>')

    for tx in _ticks(x_lo, x_hi):
        px = sx(tx)
        out.append(f'<line x1="{px:.1f}" y1="{pad_top + plot_h}" x2="{px:.1f}" '
                   f'y2="{pad_top + plot_h + 5}" stroke="#444"/>')
        out.append(f'<text x="{px:.1f}" y="{pad_top + plot_h + 20}" '
                   f'text-anchor="middle">{tx:g}</text>')
    for ty in _ticks(y_lo, y_hi):
        py = sy(ty)
        out.append(f'<line x1="{pad_left - 5}" y1="{py:.1f}" x2="{pad_left}" '
                   f'y2="{py:.1f}" stroke="#444"/>')
        out.append(f'<text x="{pad_left - 9}" y="{py + 4:.1f}" '
                   f'text-anchor="end">{ty:.4g}</text>')
    if x_label:
        out.append(f'<text x="{pad_left + plot_w / 2:.1f}" y="{height - 12}" '
                   f'text-anchor="middle">{escape(x_label)}</text>')
    if y_label:
        cy = pad_top + plot_h / 2
        out.append(f'<text x="16" y="{cy:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {cy:.1f})">{escape(y_label)}</text>')

    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = [(sx(x), sy(y)) for x, y in zip(s.xs, s.ys)]
        if s.draw_line and len(pts) > 1:
            path = " ".join(f"{px:.2f},{py:.2f}" for px, py in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
        if s.draw_points:
            for px, py in pts:
                out.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3.5" fill="{color}"/>')
        ly = pad_top + 16 + 16 * i
        lx = pad_left + plot_w - 150
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 28}" y="{ly}">{escape(s.label)}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"
