"""Minimal self-contained SVG line plots (no plotting dependency).

Enough for the experiment outputs: framed axes, linear or log10 scales,
decade/nice ticks, one polyline per series with a small color palette and
a text legend.  NaN samples split a polyline.
"""

from __future__ import annotations

import math

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 720, 520
_MARGIN = {"left": 72, "right": 24, "top": 36, "bottom": 56}


def _nice_ticks(lo: float, hi: float, n: int = 6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * step:
        ticks.append(t)
        t += step
    return ticks


def _log_ticks(lo: float, hi: float):
    lo_d = math.floor(math.log10(lo))
    hi_d = math.ceil(math.log10(hi))
    return [10.0 ** d for d in range(lo_d, hi_d + 1) if lo <= 10.0 ** d <= hi * (1 + 1e-12)]


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def line_plot(path, series, xlabel: str, ylabel: str, title: str = "",
              logx: bool = False, logy: bool = False) -> None:
    """Write an SVG with one polyline per (label, xs, ys) triple."""
    xs_all, ys_all = [], []
    for _, xs, ys in series:
        for x, y in zip(xs, ys):
            if math.isfinite(x) and math.isfinite(y):
                if (logx and x <= 0) or (logy and y <= 0):
                    continue
                xs_all.append(x)
                ys_all.append(y)
    if not xs_all:
        raise ValueError("nothing to plot")
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if logx:
        x_lo, x_hi = math.log10(x_lo), math.log10(x_hi)
    if logy:
        y_lo, y_hi = math.log10(y_lo), math.log10(y_hi)
    for pair in ("x", "y"):
        lo, hi = (x_lo, x_hi) if pair == "x" else (y_lo, y_hi)
        if hi - lo < 1e-12:
            lo, hi = lo - 0.5, hi + 0.5
        pad = 0.04 * (hi - lo)
        if pair == "x":
            x_lo, x_hi = lo - pad, hi + pad
        else:
            y_lo, y_hi = lo - pad, hi + pad

    px0, px1 = _MARGIN["left"], _W - _MARGIN["right"]
    py0, py1 = _H - _MARGIN["bottom"], _MARGIN["top"]

    def sx(x):
        v = math.log10(x) if logx else x
        return px0 + (v - x_lo) / (x_hi - x_lo) * (px1 - px0)

    def sy(y):
        v = math.log10(y) if logy else y
        return py0 + (v - y_lo) / (y_hi - y_lo) * (py1 - py0)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
           f'<rect x="{px0}" y="{py1}" width="{px1 - px0}" height="{py0 - py1}" '
           f'fill="none" stroke="black"/>']
    if title:
        out.append(f'<text x="{(px0 + px1) / 2}" y="{py1 - 10}" text-anchor="middle" '
                   f'font-size="14">{title}</text>')

    x_ticks = (_log_ticks(10 ** x_lo, 10 ** x_hi) if logx
               else _nice_ticks(x_lo, x_hi))
    for t in x_ticks:
        px = sx(t)
        out.append(f'<line x1="{px:.2f}" y1="{py0}" x2="{px:.2f}" y2="{py0 + 5}" stroke="black"/>')
        label = f"1e{int(round(math.log10(t)))}" if logx else _fmt(t)
        out.append(f'<text x="{px:.2f}" y="{py0 + 20}" text-anchor="middle">{label}</text>')
    y_ticks = (_log_ticks(10 ** y_lo, 10 ** y_hi) if logy
               else _nice_ticks(y_lo, y_hi))
    for t in y_ticks:
        py = sy(t)
        out.append(f'<line x1="{px0 - 5}" y1="{py:.2f}" x2="{px0}" y2="{py:.2f}" stroke="black"/>')
        label = f"1e{int(round(math.log10(t)))}" if logy else _fmt(t)
        out.append(f'<text x="{px0 - 8}" y="{py + 4:.2f}" text-anchor="end">{label}</text>')
    out.append(f'<text x="{(px0 + px1) / 2}" y="{_H - 12}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="18" y="{(py0 + py1) / 2}" text-anchor="middle" '
               f'transform="rotate(-90 18 {(py0 + py1) / 2})">{ylabel}</text>')

    for i, (label, xs, ys) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        chunks, chunk = [], []
        for x, y in zip(xs, ys):
            bad = not (math.isfinite(x) and math.isfinite(y)) or \
                (logx and x <= 0) or (logy and y <= 0)
            if bad:
                if chunk:
                    chunks.append(chunk)
                chunk = []
            else:
                chunk.append((sx(x), sy(y)))
        if chunk:
            chunks.append(chunk)
        for pts in chunks:
            if len(pts) == 1:
                out.append(f'<circle cx="{pts[0][0]:.2f}" cy="{pts[0][1]:.2f}" r="3" fill="{color}"/>')
            else:
                path_d = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
                out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                           f'points="{path_d}"/>')
        ly = py1 + 16 + 16 * i
        out.append(f'<line x1="{px1 - 150}" y1="{ly - 4}" x2="{px1 - 122}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{px1 - 116}" y="{ly}">{label}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
