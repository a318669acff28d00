"""Dependency-free SVG emission: line plots, heatmaps, phase portraits.

Output is deterministic (fixed viewBox, fixed number formatting, no
timestamps) so figures are byte-identical across reruns; run metadata
(parameters, seed, code version) is embedded in a <metadata> element.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH = 720.0
HEIGHT = 480.0
MARGIN = 56.0

# fixed qualitative palette (series cycle)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


def _metadata_block(metadata: dict | None) -> str:
    if not metadata:
        return ""
    items = "".join(
        f'<item key="{escape(str(k))}">{escape(str(v))}</item>'
        for k, v in sorted(metadata.items())
    )
    return f"<metadata>{items}</metadata>"


def _nice_ticks(lo: float, hi: float, n: int = 6) -> np.ndarray:
    if not hi > lo:
        return np.array([lo])
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    return np.arange(start, hi + 0.5 * step, step)


class _Axes:
    """Linear or log data -> pixel mapping inside the fixed frame."""

    def __init__(self, xlim, ylim, xlog=False, ylog=False):
        self.xlog, self.ylog = xlog, ylog
        f = math.log10 if xlog else float
        g = math.log10 if ylog else float
        self.x0, self.x1 = f(xlim[0]), f(xlim[1])
        self.y0, self.y1 = g(ylim[0]), g(ylim[1])
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0

    def px(self, x):
        v = np.log10(x) if self.xlog else np.asarray(x, dtype=float)
        return MARGIN + (v - self.x0) / (self.x1 - self.x0) * (WIDTH - 2 * MARGIN)

    def py(self, y):
        v = np.log10(y) if self.ylog else np.asarray(y, dtype=float)
        return HEIGHT - MARGIN - (v - self.y0) / (self.y1 - self.y0) * (
            HEIGHT - 2 * MARGIN
        )

    def frame(self, title: str, xlabel: str, ylabel: str) -> list[str]:
        parts = [
            f'<rect x="{_fmt(MARGIN)}" y="{_fmt(MARGIN)}" '
            f'width="{_fmt(WIDTH - 2 * MARGIN)}" height="{_fmt(HEIGHT - 2 * MARGIN)}" '
            'fill="none" stroke="#333" stroke-width="1"/>'
        ]
        for val in _nice_ticks(self.x0, self.x1):
            p = MARGIN + (val - self.x0) / (self.x1 - self.x0) * (WIDTH - 2 * MARGIN)
            lab = f"1e{val:g}" if self.xlog else f"{val:g}"
            parts.append(
                f'<line x1="{_fmt(p)}" y1="{_fmt(HEIGHT - MARGIN)}" x2="{_fmt(p)}" '
                f'y2="{_fmt(HEIGHT - MARGIN + 5)}" stroke="#333"/>'
                f'<text x="{_fmt(p)}" y="{_fmt(HEIGHT - MARGIN + 18)}" '
                f'text-anchor="middle" font-size="11">{lab}</text>'
            )
        for val in _nice_ticks(self.y0, self.y1):
            p = HEIGHT - MARGIN - (val - self.y0) / (self.y1 - self.y0) * (
                HEIGHT - 2 * MARGIN
            )
            lab = f"1e{val:g}" if self.ylog else f"{val:g}"
            parts.append(
                f'<line x1="{_fmt(MARGIN - 5)}" y1="{_fmt(p)}" x2="{_fmt(MARGIN)}" '
                f'y2="{_fmt(p)}" stroke="#333"/>'
                f'<text x="{_fmt(MARGIN - 8)}" y="{_fmt(p + 4)}" '
                f'text-anchor="end" font-size="11">{lab}</text>'
            )
        parts.append(
            f'<text x="{_fmt(WIDTH / 2)}" y="24" text-anchor="middle" '
            f'font-size="14">{escape(title)}</text>'
            f'<text x="{_fmt(WIDTH / 2)}" y="{_fmt(HEIGHT - 14)}" '
            f'text-anchor="middle" font-size="12">{escape(xlabel)}</text>'
            f'<text x="16" y="{_fmt(HEIGHT / 2)}" text-anchor="middle" '
            f'font-size="12" transform="rotate(-90 16 {_fmt(HEIGHT / 2)})">'
            f"{escape(ylabel)}</text>"
        )
        return parts


def _document(body: list[str], metadata: dict | None) -> str:
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 '
        f'{_fmt(WIDTH)} {_fmt(HEIGHT)}" font-family="sans-serif">'
        + _metadata_block(metadata)
        + f'<rect width="{_fmt(WIDTH)}" height="{_fmt(HEIGHT)}" fill="white"/>'
        + "".join(body)
        + "</svg>\n"
    )


def _polyline(xs_px, ys_px, color: str, width: float = 1.5) -> str:
    pts = " ".join(
        f"{_fmt(x)},{_fmt(y)}"
        for x, y in zip(xs_px, ys_px)
        if math.isfinite(x) and math.isfinite(y)
    )
    return (
        f'<polyline points="{pts}" fill="none" stroke="{color}" '
        f'stroke-width="{_fmt(width)}"/>'
    )


def line_plot(series, title: str = "", xlabel: str = "", ylabel: str = "",
              xlog: bool = False, metadata: dict | None = None,
              hline: float | None = None) -> str:
    """Multi-series line plot.

    ``series`` is a list of dicts with keys x, y and optional
    label, err (symmetric error bars), color, marker_only.
    """
    all_x = np.concatenate([np.asarray(s["x"], dtype=float) for s in series])
    ys, lo, hi = [], [], []
    for s in series:
        y = np.asarray(s["y"], dtype=float)
        e = np.asarray(s.get("err", np.zeros_like(y)), dtype=float)
        ys.append(y)
        lo.append(y - e)
        hi.append(y + e)
    y_lo = min(np.nanmin(v) for v in lo)
    y_hi = max(np.nanmax(v) for v in hi)
    if hline is not None:
        y_lo, y_hi = min(y_lo, hline), max(y_hi, hline)
    pad = 0.05 * (y_hi - y_lo or 1.0)
    ax = _Axes(
        (np.nanmin(all_x), np.nanmax(all_x)), (y_lo - pad, y_hi + pad), xlog=xlog
    )
    body = ax.frame(title, xlabel, ylabel)
    if hline is not None:
        p = float(ax.py(hline))
        body.append(
            f'<line x1="{_fmt(MARGIN)}" y1="{_fmt(p)}" '
            f'x2="{_fmt(WIDTH - MARGIN)}" y2="{_fmt(p)}" stroke="#999" '
            'stroke-dasharray="4 3"/>'
        )
    for k, s in enumerate(series):
        color = s.get("color", PALETTE[k % len(PALETTE)])
        xs_px = ax.px(np.asarray(s["x"], dtype=float))
        ys_px = ax.py(ys[k])
        if "err" in s:
            els = ax.py(lo[k])
            ehs = ax.py(hi[k])
            for x, e0, e1 in zip(xs_px, ehs, els):
                body.append(
                    f'<line x1="{_fmt(x)}" y1="{_fmt(e0)}" x2="{_fmt(x)}" '
                    f'y2="{_fmt(e1)}" stroke="{color}" stroke-width="1"/>'
                )
        if s.get("marker_only"):
            for x, y in zip(xs_px, ys_px):
                body.append(
                    f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="2.5" '
                    f'fill="{color}"/>'
                )
        else:
            body.append(_polyline(xs_px, ys_px, color))
        if s.get("label"):
            ty = MARGIN + 16 + 15 * k
            body.append(
                f'<line x1="{_fmt(WIDTH - MARGIN - 110)}" y1="{_fmt(ty - 4)}" '
                f'x2="{_fmt(WIDTH - MARGIN - 90)}" y2="{_fmt(ty - 4)}" '
                f'stroke="{color}" stroke-width="2"/>'
                f'<text x="{_fmt(WIDTH - MARGIN - 84)}" y="{_fmt(ty)}" '
                f'font-size="11">{escape(s["label"])}</text>'
            )
    return _document(body, metadata)


def heatmap(x_edges, y_edges, values, title: str = "", xlabel: str = "",
            ylabel: str = "", xlog: bool = False,
            contours: list | None = None,
            metadata: dict | None = None) -> str:
    """Cell heatmap of a signed field (blue negative, red positive) with
    optional contour polylines (lists of (x, y) points in data units)."""
    vals = np.asarray(values, dtype=float)
    ny, nx = vals.shape
    ax = _Axes((x_edges[0], x_edges[-1]), (y_edges[0], y_edges[-1]), xlog=xlog)
    vmax = np.nanmax(np.abs(vals)) or 1.0
    body = []
    xs_px = ax.px(np.asarray(x_edges, dtype=float))
    ys_px = ax.py(np.asarray(y_edges, dtype=float))
    for j in range(ny):
        for i in range(nx):
            v = vals[j, i]
            if not math.isfinite(v):
                fill = "#bbbbbb"
            else:
                s = min(1.0, abs(v) / vmax)
                ch = int(255 - 155 * s)
                fill = (
                    f"rgb(255,{ch},{ch})" if v > 0 else f"rgb({ch},{ch},255)"
                )
            x, y = xs_px[i], ys_px[j + 1]
            body.append(
                f'<rect x="{_fmt(x)}" y="{_fmt(y)}" '
                f'width="{_fmt(xs_px[i + 1] - x)}" '
                f'height="{_fmt(ys_px[j] - y)}" fill="{fill}"/>'
            )
    body += ax.frame(title, xlabel, ylabel)
    for poly in contours or []:
        arr = np.asarray(poly, dtype=float)
        body.append(_polyline(ax.px(arr[:, 0]), ax.py(arr[:, 1]), "#000000", 2.0))
    return _document(body, metadata)


def phase_portrait(record, title: str = "",
                   metadata: dict | None = None) -> str:
    """Planar trajectory drawn as mode-coloured spiral arcs joined at the
    switching events."""
    states = record.states[:, :2]
    span = max(np.max(np.abs(states)), 1e-12) * 1.05
    ax = _Axes((-span, span), (-span, span))
    body = ax.frame(title, "x1", "x2")
    modes = record.modes
    breaks = np.flatnonzero(np.diff(modes) != 0)
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks + 1, [len(modes) - 1]])
    for s0, s1 in zip(starts, ends):
        seg = states[s0 : s1 + 1]
        if len(seg) < 2:
            continue
        body.append(
            _polyline(ax.px(seg[:, 0]), ax.py(seg[:, 1]), PALETTE[modes[s0] % 2], 1.2)
        )
    body.append(
        f'<circle cx="{_fmt(float(ax.px(states[0, 0])))}" '
        f'cy="{_fmt(float(ax.py(states[0, 1])))}" r="4" fill="#000"/>'
    )
    return _document(body, metadata)
