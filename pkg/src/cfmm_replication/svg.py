"""Minimal deterministic SVG line plots."""

from __future__ import annotations

from html import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
WIDTH, HEIGHT = 640, 480
MARGIN = dict(left=70, right=20, top=40, bottom=55)


def _ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
    span = hi - lo
    raw = span / count
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + 0.5 * step, step)


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def line_plot(curves, title: str = "", xlabel: str = "R1", ylabel: str = "R2",
              xlim=None, ylim=None) -> str:
    """Render ``curves`` (a list of ``(label, x, y)``) as an SVG document.

    Points outside ``xlim``/``ylim`` are dropped; non-finite points break the line.
    """
    if not curves:
        raise ValueError("nothing to plot")
    data = []
    for label, x, y in curves:
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        ok = np.isfinite(x) & np.isfinite(y)
        if xlim is not None:
            ok &= (x >= xlim[0]) & (x <= xlim[1])
        if ylim is not None:
            ok &= (y >= ylim[0]) & (y <= ylim[1])
        data.append((label, x, y, ok))
    allx = np.concatenate([x[ok] for _, x, _, ok in data])
    ally = np.concatenate([y[ok] for _, _, y, ok in data])
    if allx.size == 0:
        raise ValueError("no finite points to plot")
    x0, x1 = xlim if xlim is not None else (float(allx.min()), float(allx.max()))
    y0, y1 = ylim if ylim is not None else (float(ally.min()), float(ally.max()))
    if x1 <= x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 <= y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    L, R, T, B = MARGIN["left"], WIDTH - MARGIN["right"], MARGIN["top"], HEIGHT - MARGIN["bottom"]
    sx = lambda v: L + (v - x0) / (x1 - x0) * (R - L)
    sy = lambda v: B - (v - y0) / (y1 - y0) * (B - T)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    if title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>')
    out.append(f'<rect x="{L}" y="{T}" width="{R - L}" height="{B - T}" fill="none" stroke="black"/>')
    for t in _ticks(x0, x1):
        px = sx(t)
        out.append(f'<line x1="{px:.2f}" y1="{B}" x2="{px:.2f}" y2="{B + 5}" stroke="black"/>')
        out.append(f'<text x="{px:.2f}" y="{B + 18}" text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(y0, y1):
        py = sy(t)
        out.append(f'<line x1="{L - 5}" y1="{py:.2f}" x2="{L}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text x="{L - 8}" y="{py + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
    out.append(f'<text x="{(L + R) / 2:.2f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{(T + B) / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {(T + B) / 2:.2f})">{escape(ylabel)}</text>')

    for i, (label, x, y, ok) in enumerate(data):
        colour = PALETTE[i % len(PALETTE)]
        # split into runs of consecutive valid points
        edges = np.flatnonzero(np.diff(np.concatenate([[0], ok.astype(int), [0]])))
        for a, b in zip(edges[::2], edges[1::2]):
            pts = " ".join(f"{sx(u):.2f},{sy(v):.2f}" for u, v in zip(x[a:b], y[a:b]))
            out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="2" points="{pts}"/>')
        ly = T + 18 + 18 * i
        out.append(f'<line x1="{R - 150}" y1="{ly - 4}" x2="{R - 125}" y2="{ly - 4}" '
                   f'stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{R - 118}" y="{ly}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
