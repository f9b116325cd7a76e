"""Minimal deterministic SVG charts: line, stacked area, box, scatter.

No plotting dependency; charts are built from primitive elements with fixed
float formatting, so identical inputs produce byte-identical files.  NaN
values split line paths into gaps instead of being drawn as zeros.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

# Palette shared by all charts: original data in blue, synthetic in orange.
BLUE = "#1f77b4"
ORANGE = "#ff7f0e"
GREEN = "#2ca02c"
GREY = "#7f7f7f"
PALETTE = [
    BLUE, ORANGE, GREEN, "#d62728", "#9467bd", "#8c564b", "#e377c2",
    GREY, "#bcbd22", "#17becf", "#aec7e8", "#ffbb78", "#98df8a",
]

_FONT = 'font-family="Helvetica,Arial,sans-serif"'


def _fmt(v: float) -> str:
    return f"{v:.2f}"


@dataclass
class Line:
    x: np.ndarray
    y: np.ndarray
    color: str = BLUE
    width: float = 1.5
    dash: str | None = None
    label: str | None = None


@dataclass
class AreaStack:
    """Stacked areas: ``y`` has one column per layer, stacked bottom-up."""

    x: np.ndarray
    y: np.ndarray  # (n, layers)
    colors: list[str] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)


@dataclass
class Points:
    x: np.ndarray
    y: np.ndarray
    color: str = GREY
    radius: float = 2.0
    label: str | None = None


@dataclass
class Box:
    """One box glyph at a categorical position."""

    position: float
    low: float
    q1: float
    median: float
    q3: float
    high: float
    color: str = BLUE
    label: str | None = None


@dataclass
class Panel:
    title: str = ""
    x_label: str = ""
    y_label: str = ""
    lines: list[Line] = field(default_factory=list)
    areas: list[AreaStack] = field(default_factory=list)
    points: list[Points] = field(default_factory=list)
    boxes: list[Box] = field(default_factory=list)
    x_categories: list[str] | None = None  # tick labels for box positions
    shade_x: list[float] | None = None  # x positions flagged low-support
    shade_halfwidth: float = 0.5  # half-width of shaded bands, in x units

    def data_ranges(self):
        xs: list[np.ndarray] = []
        ys: list[np.ndarray] = []
        for line in self.lines:
            xs.append(np.asarray(line.x, dtype=float))
            ys.append(np.asarray(line.y, dtype=float))
        for area in self.areas:
            xs.append(np.asarray(area.x, dtype=float))
            ys.append(np.asarray(area.y, dtype=float).sum(axis=1))
            ys.append(np.zeros(1))
        for pts in self.points:
            xs.append(np.asarray(pts.x, dtype=float))
            ys.append(np.asarray(pts.y, dtype=float))
        for box in self.boxes:
            xs.append(np.asarray([box.position - 0.5, box.position + 0.5]))
            ys.append(np.asarray([box.low, box.high]))
        def bounds(parts):
            vals = np.concatenate([p.ravel() for p in parts]) if parts else np.zeros(1)
            vals = vals[np.isfinite(vals)]
            if vals.size == 0:
                vals = np.zeros(1)
            return float(vals.min()), float(vals.max())
        return bounds(xs), bounds(ys)


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi):
        lo, hi = 0.0, 1.0
    if hi - lo <= 0:
        pad = max(abs(lo), 1.0) * 0.5
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = 10.0 * mag
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + step * 1e-9:
        ticks.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return ticks


class _Scale:
    def __init__(self, lo: float, hi: float, out_lo: float, out_hi: float):
        if hi - lo <= 0:
            pad = max(abs(lo), 1.0) * 0.5
            lo, hi = lo - pad, hi + pad
        self.lo, self.hi, self.out_lo, self.out_hi = lo, hi, out_lo, out_hi

    def __call__(self, v):
        frac = (np.asarray(v, dtype=float) - self.lo) / (self.hi - self.lo)
        return self.out_lo + frac * (self.out_hi - self.out_lo)


def _tick_label(t: float) -> str:
    if t == int(t) and abs(t) < 1e6:
        return str(int(t))
    return f"{t:.4g}"


def _polyline_paths(sx, sy) -> list[str]:
    """Path fragments split at NaN, so masked stretches render as gaps."""
    paths = []
    run: list[str] = []
    for x, y in zip(sx, sy):
        if math.isfinite(x) and math.isfinite(y):
            run.append(f"{_fmt(x)},{_fmt(y)}")
        elif run:
            paths.append(" ".join(run))
            run = []
    if run:
        paths.append(" ".join(run))
    return [p for p in paths if p]


def _render_panel(out: list[str], panel: Panel, px: float, py: float,
                  pw: float, ph: float, y_range: tuple[float, float] | None):
    margin_l, margin_b, margin_t = 46.0, 34.0, 20.0
    plot_x, plot_y = px + margin_l, py + margin_t
    plot_w, plot_h = pw - margin_l - 12.0, ph - margin_t - margin_b
    (x_lo, x_hi), (auto_y_lo, auto_y_hi) = panel.data_ranges()
    y_lo, y_hi = y_range if y_range is not None else (auto_y_lo, auto_y_hi)
    if y_hi - y_lo <= 0:
        pad = max(abs(y_lo), 1.0) * 0.5
        y_lo, y_hi = y_lo - pad, y_hi + pad
    else:
        pad = (y_hi - y_lo) * 0.05
        y_lo, y_hi = y_lo - pad, y_hi + pad
    sx = _Scale(x_lo, x_hi, plot_x, plot_x + plot_w)
    sy = _Scale(y_lo, y_hi, plot_y + plot_h, plot_y)

    if panel.title:
        out.append(
            f'<text x="{_fmt(px + pw / 2)}" y="{_fmt(py + 13)}" text-anchor="middle" '
            f'font-size="12" {_FONT}>{escape(panel.title)}</text>'
        )
    # low-support shading behind the data
    if panel.shade_x:
        half = abs(float(sx(x_lo + panel.shade_halfwidth)) - float(sx(x_lo)))
        for xv in panel.shade_x:
            cx = float(sx(xv))
            out.append(
                f'<rect x="{_fmt(cx - half)}" y="{_fmt(plot_y)}" width="{_fmt(2 * half)}" '
                f'height="{_fmt(plot_h)}" fill="#f0f0f0"/>'
            )
    # frame
    out.append(
        f'<rect x="{_fmt(plot_x)}" y="{_fmt(plot_y)}" width="{_fmt(plot_w)}" '
        f'height="{_fmt(plot_h)}" fill="none" stroke="#333333" stroke-width="0.8"/>'
    )
    # ticks
    for t in nice_ticks(x_lo, x_hi):
        if panel.x_categories is not None:
            continue
        cx = float(sx(t))
        if not (plot_x - 0.5 <= cx <= plot_x + plot_w + 0.5):
            continue
        out.append(
            f'<line x1="{_fmt(cx)}" y1="{_fmt(plot_y + plot_h)}" x2="{_fmt(cx)}" '
            f'y2="{_fmt(plot_y + plot_h + 4)}" stroke="#333333" stroke-width="0.8"/>'
        )
        out.append(
            f'<text x="{_fmt(cx)}" y="{_fmt(plot_y + plot_h + 15)}" text-anchor="middle" '
            f'font-size="9" {_FONT}>{escape(_tick_label(t))}</text>'
        )
    if panel.x_categories is not None:
        for pos, name in enumerate(panel.x_categories):
            cx = float(sx(pos))
            out.append(
                f'<text x="{_fmt(cx)}" y="{_fmt(plot_y + plot_h + 15)}" text-anchor="middle" '
                f'font-size="9" {_FONT}>{escape(name)}</text>'
            )
    for t in nice_ticks(y_lo, y_hi):
        cy = float(sy(t))
        if not (plot_y - 0.5 <= cy <= plot_y + plot_h + 0.5):
            continue
        out.append(
            f'<line x1="{_fmt(plot_x - 4)}" y1="{_fmt(cy)}" x2="{_fmt(plot_x)}" '
            f'y2="{_fmt(cy)}" stroke="#333333" stroke-width="0.8"/>'
        )
        out.append(
            f'<text x="{_fmt(plot_x - 6)}" y="{_fmt(cy + 3)}" text-anchor="end" '
            f'font-size="9" {_FONT}>{escape(_tick_label(t))}</text>'
        )
    if panel.x_label:
        out.append(
            f'<text x="{_fmt(plot_x + plot_w / 2)}" y="{_fmt(py + ph - 6)}" '
            f'text-anchor="middle" font-size="10" {_FONT}>{escape(panel.x_label)}</text>'
        )
    if panel.y_label:
        cx, cy = px + 12.0, plot_y + plot_h / 2
        out.append(
            f'<text x="{_fmt(cx)}" y="{_fmt(cy)}" text-anchor="middle" font-size="10" '
            f'{_FONT} transform="rotate(-90 {_fmt(cx)} {_fmt(cy)})">'
            f"{escape(panel.y_label)}</text>"
        )

    # stacked areas first (background), then lines, points, boxes
    for area in panel.areas:
        x = np.asarray(area.x, dtype=float)
        y = np.asarray(area.y, dtype=float)
        base = np.zeros(len(x))
        for li in range(y.shape[1]):
            layer = y[:, li]
            finite = np.isfinite(layer)
            top = base + np.where(finite, layer, 0.0)
            color = area.colors[li] if li < len(area.colors) else PALETTE[li % len(PALETTE)]
            # split into finite runs so masked stretches become gaps
            start = None
            for k in range(len(x) + 1):
                ok = k < len(x) and finite[k]
                if ok and start is None:
                    start = k
                elif not ok and start is not None:
                    seg = slice(start, k)
                    fwd = [f"{_fmt(float(sx(xv)))},{_fmt(float(sy(tv)))}"
                           for xv, tv in zip(x[seg], top[seg])]
                    back = [f"{_fmt(float(sx(xv)))},{_fmt(float(sy(bv)))}"
                            for xv, bv in zip(x[seg][::-1], base[seg][::-1])]
                    out.append(
                        f'<polygon points="{" ".join(fwd + back)}" fill="{color}" '
                        f'fill-opacity="0.85" stroke="none"/>'
                    )
                    start = None
            base = np.where(finite, top, base)
    for line in panel.lines:
        stroke_extra = f' stroke-dasharray="{line.dash}"' if line.dash else ""
        for frag in _polyline_paths(sx(np.asarray(line.x, float)),
                                    sy(np.asarray(line.y, float))):
            out.append(
                f'<polyline points="{frag}" fill="none" stroke="{line.color}" '
                f'stroke-width="{_fmt(line.width)}"{stroke_extra}/>'
            )
    for pts in panel.points:
        for x, y in zip(np.asarray(pts.x, float), np.asarray(pts.y, float)):
            if math.isfinite(x) and math.isfinite(y):
                out.append(
                    f'<circle cx="{_fmt(float(sx(x)))}" cy="{_fmt(float(sy(y)))}" '
                    f'r="{_fmt(pts.radius)}" fill="{pts.color}" fill-opacity="0.7"/>'
                )
    for box in panel.boxes:
        bw = 0.3
        x0, x1 = float(sx(box.position - bw)), float(sx(box.position + bw))
        cx = float(sx(box.position))
        y_q1, y_q3 = float(sy(box.q1)), float(sy(box.q3))
        y_med, y_lo_w, y_hi_w = float(sy(box.median)), float(sy(box.low)), float(sy(box.high))
        out.append(
            f'<rect x="{_fmt(x0)}" y="{_fmt(y_q3)}" width="{_fmt(x1 - x0)}" '
            f'height="{_fmt(y_q1 - y_q3)}" fill="{box.color}" fill-opacity="0.35" '
            f'stroke="{box.color}" stroke-width="1.2"/>'
        )
        out.append(
            f'<line x1="{_fmt(x0)}" y1="{_fmt(y_med)}" x2="{_fmt(x1)}" y2="{_fmt(y_med)}" '
            f'stroke="{box.color}" stroke-width="1.6"/>'
        )
        for y_end, y_box in ((y_lo_w, y_q1), (y_hi_w, y_q3)):
            out.append(
                f'<line x1="{_fmt(cx)}" y1="{_fmt(y_box)}" x2="{_fmt(cx)}" '
                f'y2="{_fmt(y_end)}" stroke="{box.color}" stroke-width="1.0"/>'
            )
            out.append(
                f'<line x1="{_fmt(float(sx(box.position - bw / 2)))}" y1="{_fmt(y_end)}" '
                f'x2="{_fmt(float(sx(box.position + bw / 2)))}" y2="{_fmt(y_end)}" '
                f'stroke="{box.color}" stroke-width="1.0"/>'
            )


def _legend_entries(panels: list[Panel]) -> list[tuple[str, str]]:
    seen: dict[str, str] = {}
    for panel in panels:
        for line in panel.lines:
            if line.label and line.label not in seen:
                seen[line.label] = line.color
        for pts in panel.points:
            if pts.label and pts.label not in seen:
                seen[pts.label] = pts.color
        for box in panel.boxes:
            if box.label and box.label not in seen:
                seen[box.label] = box.color
        for area in panel.areas:
            for li, label in enumerate(area.labels):
                if label and label not in seen:
                    color = area.colors[li] if li < len(area.colors) else PALETTE[li % len(PALETTE)]
                    seen[label] = color
    return list(seen.items())


def render_figure(
    panels: list[Panel],
    panel_width: float = 330.0,
    panel_height: float = 250.0,
    columns: int | None = None,
    shared_y: bool = True,
    title: str = "",
) -> str:
    """Lay panels out on a grid and return the complete SVG document."""
    n = max(len(panels), 1)
    columns = columns or n
    rows = (n + columns - 1) // columns
    legend = _legend_entries(panels)
    legend_h = 18.0 if legend else 0.0
    title_h = 18.0 if title else 0.0
    width = panel_width * columns
    height = panel_height * rows + legend_h + title_h

    y_range = None
    if shared_y and panels:
        los, his = [], []
        for panel in panels:
            _, (lo, hi) = panel.data_ranges()
            los.append(lo)
            his.append(hi)
        y_range = (min(los), max(his))

    out: list[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        f'<rect x="0" y="0" width="{_fmt(width)}" height="{_fmt(height)}" fill="white"/>',
    ]
    if title:
        out.append(
            f'<text x="{_fmt(width / 2)}" y="13" text-anchor="middle" font-size="13" '
            f'{_FONT}>{escape(title)}</text>'
        )
    if legend:
        x_cursor = 10.0
        y_leg = title_h + 12.0
        for label, color in legend:
            out.append(
                f'<rect x="{_fmt(x_cursor)}" y="{_fmt(y_leg - 8)}" width="14" height="8" '
                f'fill="{color}"/>'
            )
            out.append(
                f'<text x="{_fmt(x_cursor + 18)}" y="{_fmt(y_leg)}" font-size="10" '
                f'{_FONT}>{escape(label)}</text>'
            )
            x_cursor += 26.0 + 6.2 * len(label)
    for idx, panel in enumerate(panels):
        row, col = divmod(idx, columns)
        _render_panel(
            out,
            panel,
            px=col * panel_width,
            py=title_h + legend_h + row * panel_height,
            pw=panel_width,
            ph=panel_height,
            y_range=y_range,
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
