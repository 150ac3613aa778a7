"""Minimal in-house SVG rendering: log-scale line plots and grayscale heatmaps.

The outputs are paper-figure analogs; simple primitives suffice and keep the
artifact free of plotting dependencies.  All coordinates are written with
fixed precision so output bytes are reproducible.
"""

from __future__ import annotations

import math

_PALETTE = ("#000000", "#4477aa", "#cc6677", "#228833", "#aa3377",
            "#66ccee", "#999933", "#ee7733", "#bbbbbb")


def _f(x) -> str:
    return f"{x:.2f}"


def _esc(text) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))


def line_plot(series, *, title="", xlabel="", ylabel="", log_y=True,
              width=760, height=480, floor=1e-16) -> str:
    """Render labeled (xs, ys) polylines; y on a log10 scale by default.

    ``series`` is a list of (label, xs, ys) triples.  Nonpositive ys are
    clamped to ``floor`` under the log scale.
    """
    ml, mr, mt, mb = 75, 170, 40, 55
    pw, ph = width - ml - mr, height - mt - mb

    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = []
    for _, _, ys in series:
        for y in ys:
            ys_all.append(max(y, floor) if log_y else y)
    if not xs_all:
        xs_all, ys_all = [0.0, 1.0], [floor, 1.0]
    x_lo, x_hi = min(xs_all), max(xs_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if log_y:
        y_lo = math.floor(math.log10(min(ys_all)))
        y_hi = math.ceil(math.log10(max(ys_all)))
        if y_hi == y_lo:
            y_hi += 1
    else:
        y_lo, y_hi = min(ys_all), max(ys_all)
        if y_hi == y_lo:
            y_hi = y_lo + 1.0

    def px(x):
        return ml + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        if log_y:
            v = (math.log10(max(y, floor)) - y_lo) / (y_hi - y_lo)
        else:
            v = (y - y_lo) / (y_hi - y_lo)
        return mt + ph - v * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{_f(ml + pw / 2)}" y="24" text-anchor="middle" '
           f'font-size="15" font-family="sans-serif">{_esc(title)}</text>']

    # axes
    out.append(f'<line x1="{_f(ml)}" y1="{_f(mt + ph)}" x2="{_f(ml + pw)}" '
               f'y2="{_f(mt + ph)}" stroke="black" stroke-width="1"/>')
    out.append(f'<line x1="{_f(ml)}" y1="{_f(mt)}" x2="{_f(ml)}" '
               f'y2="{_f(mt + ph)}" stroke="black" stroke-width="1"/>')

    for i in range(6):
        x = x_lo + i * (x_hi - x_lo) / 5
        out.append(f'<line x1="{_f(px(x))}" y1="{_f(mt + ph)}" '
                   f'x2="{_f(px(x))}" y2="{_f(mt + ph + 5)}" stroke="black"/>')
        out.append(f'<text x="{_f(px(x))}" y="{_f(mt + ph + 20)}" '
                   f'text-anchor="middle" font-size="11" '
                   f'font-family="sans-serif">{x:.4g}</text>')
    if log_y:
        span = max(y_hi - y_lo, 1)
        step = max(1, span // 8)
        for e in range(int(y_lo), int(y_hi) + 1, int(step)):
            yy = py(10.0 ** e)
            out.append(f'<line x1="{_f(ml - 5)}" y1="{_f(yy)}" x2="{_f(ml)}" '
                       f'y2="{_f(yy)}" stroke="black"/>')
            out.append(f'<text x="{_f(ml - 9)}" y="{_f(yy + 4)}" '
                       f'text-anchor="end" font-size="11" '
                       f'font-family="sans-serif">1e{e}</text>')
    else:
        for i in range(6):
            y = y_lo + i * (y_hi - y_lo) / 5
            yy = py(y)
            out.append(f'<line x1="{_f(ml - 5)}" y1="{_f(yy)}" x2="{_f(ml)}" '
                       f'y2="{_f(yy)}" stroke="black"/>')
            out.append(f'<text x="{_f(ml - 9)}" y="{_f(yy + 4)}" '
                       f'text-anchor="end" font-size="11" '
                       f'font-family="sans-serif">{y:.3g}</text>')

    out.append(f'<text x="{_f(ml + pw / 2)}" y="{_f(height - 12)}" '
               f'text-anchor="middle" font-size="13" '
               f'font-family="sans-serif">{_esc(xlabel)}</text>')
    out.append(f'<text x="18" y="{_f(mt + ph / 2)}" text-anchor="middle" '
               f'font-size="13" font-family="sans-serif" '
               f'transform="rotate(-90 18 {_f(mt + ph / 2)})">{_esc(ylabel)}</text>')

    for idx, (label, xs, ys) in enumerate(series):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = " ".join(f"{_f(px(x))},{_f(py(y))}" for x, y in zip(xs, ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"/>')
        ly = mt + 14 + 16 * idx
        out.append(f'<line x1="{_f(ml + pw + 10)}" y1="{_f(ly - 4)}" '
                   f'x2="{_f(ml + pw + 34)}" y2="{_f(ly - 4)}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_f(ml + pw + 40)}" y="{_f(ly)}" font-size="11" '
                   f'font-family="sans-serif">{_esc(label)}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"


def heatmap(values, x_values, y_values, *, title="", xlabel="", ylabel="",
            width=640, height=520) -> str:
    """Grayscale success-rate heatmap: white = rate 1, black = rate 0.

    ``values[i][j]`` is the rate for row value y_values[i] and column value
    x_values[j].  Rows render bottom-up so larger y sits higher.
    """
    ml, mr, mt, mb = 90, 30, 45, 65
    pw, ph = width - ml - mr, height - mt - mb
    ny, nx = len(y_values), len(x_values)
    cw, ch = pw / nx, ph / ny

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{_f(ml + pw / 2)}" y="26" text-anchor="middle" '
           f'font-size="15" font-family="sans-serif">{_esc(title)}</text>']
    for i in range(ny):
        for j in range(nx):
            v = min(max(float(values[i][j]), 0.0), 1.0)
            lum = int(round(255 * v))
            x = ml + j * cw
            y = mt + (ny - 1 - i) * ch
            out.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(cw)}" '
                       f'height="{_f(ch)}" fill="rgb({lum},{lum},{lum})" '
                       f'stroke="#888888" stroke-width="0.5"/>')
    for j, xv in enumerate(x_values):
        out.append(f'<text x="{_f(ml + (j + 0.5) * cw)}" y="{_f(mt + ph + 18)}" '
                   f'text-anchor="middle" font-size="11" '
                   f'font-family="sans-serif">{xv:.3g}</text>')
    for i, yv in enumerate(y_values):
        out.append(f'<text x="{_f(ml - 8)}" y="{_f(mt + (ny - 1 - i + 0.5) * ch + 4)}" '
                   f'text-anchor="end" font-size="11" '
                   f'font-family="sans-serif">{yv:.3g}</text>')
    out.append(f'<text x="{_f(ml + pw / 2)}" y="{_f(height - 18)}" '
               f'text-anchor="middle" font-size="13" '
               f'font-family="sans-serif">{_esc(xlabel)}</text>')
    out.append(f'<text x="22" y="{_f(mt + ph / 2)}" text-anchor="middle" '
               f'font-size="13" font-family="sans-serif" '
               f'transform="rotate(-90 22 {_f(mt + ph / 2)})">{_esc(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
