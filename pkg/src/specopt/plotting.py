"""Self-contained SVG line charts of convergence curves.

The y axis is logarithmic. Each method gets a solid mean line and a dashed
median line in the same color. Output is plain text built with fixed
formatting, so identical inputs give byte-identical files.
"""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f"]
WIDTH, HEIGHT = 820, 520
LEFT, RIGHT, TOP, BOTTOM = 80, 180, 40, 60
MAX_POINTS = 600


def _sample_indices(length):
    if length <= MAX_POINTS:
        return np.arange(length)
    return np.unique(np.linspace(0, length - 1, MAX_POINTS).round().astype(int))


def _nice_ticks(lo, hi, count=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(t)
        t += step
    return ticks


def convergence_svg(curves, title="", floor=1e-16):
    """Render ``{label: CurveAggregate}`` as an SVG document string."""
    labels = list(curves)
    length = max(len(curves[k].mean) for k in labels)
    vals = np.concatenate([np.concatenate([curves[k].mean, curves[k].median]) for k in labels])
    vals = vals[np.isfinite(vals)]
    positive = vals[vals > 0]
    ymin = max(float(positive.min()) if positive.size else 1.0, floor)
    ymax = max(float(positive.max()) if positive.size else 10.0, ymin * 10)
    lo_dec, hi_dec = math.floor(math.log10(ymin)), math.ceil(math.log10(ymax))
    if hi_dec == lo_dec:
        hi_dec += 1
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM
    xmax = max(length - 1, 1)

    def px(k):
        return LEFT + pw * k / xmax

    def py(v):
        v = min(max(v, 10.0 ** lo_dec), 10.0 ** hi_dec)
        return TOP + ph * (hi_dec - math.log10(v)) / (hi_dec - lo_dec)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    if title:
        out.append(f'<text x="{LEFT + pw / 2:.2f}" y="22" text-anchor="middle" '
                   f'font-size="14">{escape(title)}</text>')
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" '
               f'stroke="black"/>')
    step = max(1, (hi_dec - lo_dec + 7) // 8)
    for dec in range(lo_dec, hi_dec + 1, step):
        y = py(10.0 ** dec)
        out.append(f'<line x1="{LEFT}" y1="{y:.2f}" x2="{LEFT + pw}" y2="{y:.2f}" '
                   f'stroke="#dddddd"/>')
        out.append(f'<text x="{LEFT - 6}" y="{y + 4:.2f}" text-anchor="end">1e{dec}</text>')
    for t in _nice_ticks(0, xmax):
        x = px(t)
        out.append(f'<line x1="{x:.2f}" y1="{TOP + ph}" x2="{x:.2f}" y2="{TOP + ph + 5}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{TOP + ph + 18}" text-anchor="middle">'
                   f'{int(round(t))}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 15}" text-anchor="middle">'
               f'iteration</text>')
    out.append(f'<text x="18" y="{TOP + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {TOP + ph / 2:.2f})">objective value</text>')
    for i, label in enumerate(labels):
        color = PALETTE[i % len(PALETTE)]
        curve = curves[label]
        idx = _sample_indices(len(curve.mean))
        for series, dash in ((curve.mean, ""), (curve.median, ' stroke-dasharray="6 4"')):
            pts = " ".join(f"{px(k):.2f},{py(float(series[k])):.2f}" for k in idx)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} '
                       f'points="{pts}"/>')
        ly = TOP + 16 + 20 * i
        lx = LEFT + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="2"/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}">{escape(label)}</text>')
    ly = TOP + 16 + 20 * len(labels) + 10
    out.append(f'<text x="{LEFT + pw + 12}" y="{ly}" fill="#555555">solid: mean</text>')
    out.append(f'<text x="{LEFT + pw + 12}" y="{ly + 16}" fill="#555555">dashed: median</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
