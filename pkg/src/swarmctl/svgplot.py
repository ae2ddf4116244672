"""Minimal SVG emission for line charts and scatter snapshots.

Charts use a fixed 800x500 viewBox with a 60px margin; data coordinates are
affinely mapped into the plot box, axis limits are padded data ranges, and
tick labels use repr-style shortest decimals. No plotting dependency.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT, MARGIN = 800, 500, 60
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _limits(values):
    lo = float(np.min(values))
    hi = float(np.max(values))
    if not (math.isfinite(lo) and math.isfinite(hi)):
        lo, hi = 0.0, 1.0
    if hi - lo < 1e-300:
        pad = max(abs(hi), 1.0) * 0.05
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


def _ticks(lo, hi, n=5):
    span = hi - lo
    if span <= 0:
        return [lo]
    step = 10 ** math.floor(math.log10(span / n))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= n:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * span:
        ticks.append(t)
        t += step
    return ticks


class _Canvas:
    def __init__(self, title, xlabel, ylabel):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
            f'font-family="monospace" font-size="12">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH/2}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>',
            f'<text x="{WIDTH/2}" y="{HEIGHT-10}" text-anchor="middle">{escape(xlabel)}</text>',
            f'<text x="16" y="{HEIGHT/2}" text-anchor="middle" '
            f'transform="rotate(-90 16 {HEIGHT/2})">{escape(ylabel)}</text>',
            f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH-2*MARGIN}" '
            f'height="{HEIGHT-2*MARGIN}" fill="none" stroke="black"/>',
        ]

    def map_x(self, x, lo, hi):
        return MARGIN + (x - lo) / (hi - lo) * (WIDTH - 2 * MARGIN)

    def map_y(self, y, lo, hi):
        return HEIGHT - MARGIN - (y - lo) / (hi - lo) * (HEIGHT - 2 * MARGIN)

    def axes(self, xlim, ylim):
        for t in _ticks(*xlim):
            px = self.map_x(t, *xlim)
            self.parts.append(
                f'<line x1="{px:.2f}" y1="{HEIGHT-MARGIN}" x2="{px:.2f}" '
                f'y2="{HEIGHT-MARGIN+5}" stroke="black"/>')
            self.parts.append(
                f'<text x="{px:.2f}" y="{HEIGHT-MARGIN+18}" text-anchor="middle">{t:.6g}</text>')
        for t in _ticks(*ylim):
            py = self.map_y(t, *ylim)
            self.parts.append(
                f'<line x1="{MARGIN-5}" y1="{py:.2f}" x2="{MARGIN}" y2="{py:.2f}" stroke="black"/>')
            self.parts.append(
                f'<text x="{MARGIN-8}" y="{py+4:.2f}" text-anchor="end">{t:.6g}</text>')

    def finish(self, path):
        self.parts.append("</svg>")
        with open(path, "w") as fh:
            fh.write("\n".join(self.parts))
            fh.write("\n")


def line_chart(path, x, series: dict, title="", xlabel="t", ylabel=""):
    """Polyline chart of one or more named series over a shared abscissa."""
    cv = _Canvas(title, xlabel, ylabel)
    xlim = _limits(np.asarray(x, dtype=float))
    allv = np.concatenate([np.asarray(v, dtype=float) for v in series.values()])
    ylim = _limits(allv[np.isfinite(allv)] if np.any(np.isfinite(allv)) else [0.0, 1.0])
    cv.axes(xlim, ylim)
    for k, (name, vals) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(
            f"{cv.map_x(float(xi), *xlim):.2f},{cv.map_y(float(yi), *ylim):.2f}"
            for xi, yi in zip(x, vals) if math.isfinite(float(yi)))
        cv.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        cv.parts.append(
            f'<text x="{WIDTH-MARGIN-8}" y="{MARGIN+16+14*k}" text-anchor="end" '
            f'fill="{color}">{escape(str(name))}</text>')
    cv.finish(path)


def scatter_snapshots(path, snapshots: dict, title="", velocity_scale=0.0):
    """Agent position snapshots {label: (N, 2) array}; optional velocity whiskers
    via {label: (positions, velocities)} tuples."""
    cv = _Canvas(title, "x", "y")
    all_pts = []
    for val in snapshots.values():
        pts = val[0] if isinstance(val, tuple) else val
        all_pts.append(np.asarray(pts, dtype=float))
    stacked = np.concatenate(all_pts, axis=0)
    lo = float(np.min(stacked))
    hi = float(np.max(stacked))
    pad = max((hi - lo) * 0.08, 1e-6)
    lim = (lo - pad, hi + pad)
    cv.axes(lim, lim)
    for k, (label, val) in enumerate(snapshots.items()):
        color = PALETTE[k % len(PALETTE)]
        if isinstance(val, tuple):
            pts, vel = val
        else:
            pts, vel = val, None
        pts = np.asarray(pts, dtype=float)
        for i in range(pts.shape[0]):
            px = cv.map_x(pts[i, 0], *lim)
            py = cv.map_y(pts[i, 1], *lim)
            cv.parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="2.5" fill="{color}"/>')
            if vel is not None and velocity_scale > 0:
                qx = cv.map_x(pts[i, 0] + velocity_scale * vel[i, 0], *lim)
                qy = cv.map_y(pts[i, 1] + velocity_scale * vel[i, 1], *lim)
                cv.parts.append(
                    f'<line x1="{px:.2f}" y1="{py:.2f}" x2="{qx:.2f}" y2="{qy:.2f}" '
                    f'stroke="{color}" stroke-width="0.8"/>')
        cv.parts.append(
            f'<text x="{WIDTH-MARGIN-8}" y="{MARGIN+16+14*k}" text-anchor="end" '
            f'fill="{color}">{escape(str(label))}</text>')
    cv.finish(path)
