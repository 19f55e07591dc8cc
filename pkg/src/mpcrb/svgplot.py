"""Minimal standalone SVG rendering for experiment outputs.

Deliberately dependency-free: CSV is the canonical output and these plots
are quick-look companions.  Output is deterministic (no timestamps, fixed
float formatting).
"""

from __future__ import annotations

import math

_W, _H = 720, 480
_ML, _MR, _MT, _MB = 70, 20, 36, 52
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


def _fmt(v: float) -> str:
    return format(v, ".6g")


def _ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for m in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= m * mag:
            step = m * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * abs(step):
        out.append(t)
        t += step
    return out


class _Frame:
    def __init__(self, xlim, ylim, ylog=False):
        self.x0, self.x1 = xlim
        self.ylog = ylog
        y0, y1 = ylim
        if ylog:
            y0, y1 = math.log10(y0), math.log10(y1)
        self.y0, self.y1 = y0, y1
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1.0

    def px(self, x: float) -> float:
        return _ML + (x - self.x0) / (self.x1 - self.x0) * (_W - _ML - _MR)

    def py(self, y: float) -> float:
        if self.ylog:
            y = math.log10(y)
        return _H - _MB - (y - self.y0) / (self.y1 - self.y0) * (_H - _MT - _MB)


def _axes(parts: list[str], frame: _Frame, xlabel: str, ylabel: str, title: str):
    parts.append(f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
                 f'height="{_H - _MT - _MB}" fill="none" stroke="black"/>')
    for t in _ticks(frame.x0, frame.x1):
        px = frame.px(t)
        parts.append(f'<line x1="{_fmt(px)}" y1="{_H - _MB}" x2="{_fmt(px)}" '
                     f'y2="{_H - _MB + 5}" stroke="black"/>')
        parts.append(f'<text x="{_fmt(px)}" y="{_H - _MB + 18}" font-size="11" '
                     f'text-anchor="middle">{_fmt(t)}</text>')
    yt = _ticks(frame.y0, frame.y1)
    for t in yt:
        yv = 10.0 ** t if frame.ylog else t
        py = frame.py(yv)
        label = _fmt(yv) if not frame.ylog else f"1e{_fmt(t)}"
        parts.append(f'<line x1="{_ML - 5}" y1="{_fmt(py)}" x2="{_ML}" '
                     f'y2="{_fmt(py)}" stroke="black"/>')
        parts.append(f'<text x="{_ML - 8}" y="{_fmt(py + 4)}" font-size="11" '
                     f'text-anchor="end">{label}</text>')
    parts.append(f'<text x="{(_ML + _W - _MR) // 2}" y="{_H - 14}" font-size="13" '
                 f'text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="16" y="{(_MT + _H - _MB) // 2}" font-size="13" '
                 f'text-anchor="middle" transform="rotate(-90 16 '
                 f'{(_MT + _H - _MB) // 2})">{ylabel}</text>')
    parts.append(f'<text x="{_W // 2}" y="20" font-size="14" '
                 f'text-anchor="middle">{title}</text>')


def line_plot(path, series, xlabel: str, ylabel: str, title: str,
              ylog: bool = False) -> None:
    """Write a multi-series line plot; None/NaN samples break the line."""
    xs, ys = [], []
    for _, x, y in series:
        for xv, yv in zip(x, y):
            if yv is None or (isinstance(yv, float) and math.isnan(yv)):
                continue
            if ylog and yv <= 0:
                continue
            xs.append(xv)
            ys.append(yv)
    if not xs:
        raise ValueError("nothing to plot")
    frame = _Frame((min(xs), max(xs)), (min(ys), max(ys)), ylog=ylog)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}">',
             f'<rect width="{_W}" height="{_H}" fill="white"/>']
    _axes(parts, frame, xlabel, ylabel, title)
    for i, (name, x, y) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        run: list[str] = []
        segments = []
        for xv, yv in zip(x, y):
            bad = yv is None or (isinstance(yv, float) and math.isnan(yv)) \
                or (ylog and (yv is None or yv <= 0))
            if bad:
                if run:
                    segments.append(run)
                run = []
                continue
            run.append(f"{_fmt(frame.px(xv))},{_fmt(frame.py(yv))}")
        if run:
            segments.append(run)
        for seg in segments:
            if len(seg) == 1:
                cx, cy = seg[0].split(",")
                parts.append(f'<circle cx="{cx}" cy="{cy}" r="1.5" fill="{color}"/>')
            else:
                parts.append(f'<polyline points="{" ".join(seg)}" fill="none" '
                             f'stroke="{color}" stroke-width="1.5"/>')
        ly = _MT + 16 + 16 * i
        parts.append(f'<line x1="{_W - _MR - 130}" y1="{ly - 4}" '
                     f'x2="{_W - _MR - 105}" y2="{ly - 4}" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        parts.append(f'<text x="{_W - _MR - 100}" y="{ly}" '
                     f'font-size="11">{name}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


def heatmap(path, x, y, z_rows, xlabel: str, ylabel: str, title: str,
            contour_level: float | None = None) -> None:
    """Cell heatmap of z_rows[i][j] over (y[i], x[j]), with an optional
    level contour drawn on cell edges where the value crosses it."""
    finite = [v for row in z_rows for v in row
              if v is not None and math.isfinite(v)]
    if not finite:
        raise ValueError("nothing to plot")
    zlo, zhi = min(finite), max(finite)
    if zhi == zlo:
        zhi = zlo + 1.0
    nx, ny = len(x), len(y)
    cw = (_W - _ML - _MR) / nx
    ch = (_H - _MT - _MB) / ny
    frame = _Frame((min(x), max(x)), (min(y), max(y)))
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}">',
             f'<rect width="{_W}" height="{_H}" fill="white"/>']
    for i in range(ny):
        for j in range(nx):
            v = z_rows[i][j]
            if v is None or not math.isfinite(v):
                fill = "#dddddd"
            else:
                u = (v - zlo) / (zhi - zlo)
                r = int(255 * u)
                b = int(255 * (1 - u))
                fill = f"rgb({r},{int(96 + 64 * (1 - abs(2 * u - 1)))},{b})"
            parts.append(f'<rect x="{_fmt(_ML + j * cw)}" y="{_fmt(_MT + (ny - 1 - i) * ch)}" '
                         f'width="{_fmt(cw + 0.5)}" height="{_fmt(ch + 0.5)}" fill="{fill}"/>')
    if contour_level is not None:
        for i in range(ny):
            for j in range(nx - 1):
                a, b = z_rows[i][j], z_rows[i][j + 1]
                if a is None or b is None:
                    continue
                if (a - contour_level) * (b - contour_level) < 0:
                    px = _ML + (j + 1) * cw
                    py = _MT + (ny - 1 - i) * ch
                    parts.append(f'<line x1="{_fmt(px)}" y1="{_fmt(py)}" '
                                 f'x2="{_fmt(px)}" y2="{_fmt(py + ch)}" '
                                 f'stroke="black" stroke-width="1.2"/>')
        for i in range(ny - 1):
            for j in range(nx):
                a, b = z_rows[i][j], z_rows[i + 1][j]
                if a is None or b is None:
                    continue
                if (a - contour_level) * (b - contour_level) < 0:
                    px = _ML + j * cw
                    py = _MT + (ny - 1 - i) * ch
                    parts.append(f'<line x1="{_fmt(px)}" y1="{_fmt(py)}" '
                                 f'x2="{_fmt(px + cw)}" y2="{_fmt(py)}" '
                                 f'stroke="black" stroke-width="1.2"/>')
    _axes(parts, frame, xlabel, ylabel, title)
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
