"""Standalone SVG rendering of contour grids.

Output is a pure function of the grid and style: elements are emitted in a
fixed order and every coordinate is written with six significant digits.
"""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .bounds.grid import ContourGrid
from .model import ValidationError


@dataclass(frozen=True)
class SvgStyle:
    width: int = 640
    height: int = 520
    margin_left: int = 72
    margin_right: int = 24
    margin_top: int = 40
    margin_bottom: int = 60
    ticks: int = 6
    nullify_color: str = "#b2182b"
    significance_color: str = "#2166ac"
    marker_color: str = "#1a1a1a"
    font_size: int = 12

    @classmethod
    def from_dict(cls, d: dict | None) -> SvgStyle:
        return cls(**(d or {}))


def _num(v: float) -> str:
    s = format(float(v), ".6g")
    return "0" if s == "-0" else s


def render_contour_svg(grid: ContourGrid, style: SvgStyle | dict | None = None) -> str:
    """SVG document with the nullify and significance curves and benchmark markers.

    Level curves are taken from ``grid.with_levels()`` when the grid does not
    carry them yet.  A level with no crossings emits no path.
    """
    if not isinstance(style, SvgStyle):
        style = SvgStyle.from_dict(style)
    x, y = np.asarray(grid.x_axis, float), np.asarray(grid.y_axis, float)
    if len(x) < 2 or len(y) < 2 or not x[-1] > x[0] or not y[-1] > y[0]:
        raise ValidationError("degenerate grid: each axis needs two distinct points")
    if not (np.isfinite(grid.surface_estimate).all() and np.isfinite(grid.surface_t).all()):
        raise ValidationError("degenerate grid: surface contains non-finite values")
    if not grid.level_nullify and not grid.level_significance:
        grid = grid.with_levels()

    pw = style.width - style.margin_left - style.margin_right
    ph = style.height - style.margin_top - style.margin_bottom
    x0, x1, y0, y1 = x[0], x[-1], y[0], y[-1]

    def px(v):
        return style.margin_left + (min(max(v, x0), x1) - x0) / (x1 - x0) * pw

    def py(v):
        return style.margin_top + ph - (min(max(v, y0), y1) - y0) / (y1 - y0) * ph

    fs = style.font_size
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{style.width}" '
        f'height="{style.height}" viewBox="0 0 {style.width} {style.height}">',
        f'<rect x="0" y="0" width="{style.width}" height="{style.height}" fill="#ffffff"/>',
    ]
    if grid.title:
        out.append(f'<text class="title" x="{_num(style.width / 2)}" y="{_num(style.margin_top / 2 + fs / 2)}" '
                   f'font-size="{fs + 2}" text-anchor="middle">{escape(grid.title)}</text>')
    # axes and ticks
    left = style.margin_left
    top, bottom = style.margin_top, style.margin_top + ph
    out.append(f'<g class="axes" stroke="#000000" stroke-width="1" fill="none">'
               f'<rect x="{_num(left)}" y="{_num(top)}" width="{_num(pw)}" height="{_num(ph)}"/></g>')
    out.append(f'<g class="ticks" font-size="{fs}" fill="#000000">')
    for v in np.linspace(x0, x1, style.ticks):
        out.append(f'<line x1="{_num(px(v))}" y1="{_num(bottom)}" x2="{_num(px(v))}" '
                   f'y2="{_num(bottom + 5)}" stroke="#000000"/>')
        out.append(f'<text x="{_num(px(v))}" y="{_num(bottom + 8 + fs)}" '
                   f'text-anchor="middle">{_num(v)}</text>')
    for v in np.linspace(y0, y1, style.ticks):
        out.append(f'<line x1="{_num(left - 5)}" y1="{_num(py(v))}" x2="{_num(left)}" '
                   f'y2="{_num(py(v))}" stroke="#000000"/>')
        out.append(f'<text x="{_num(left - 8)}" y="{_num(py(v) + fs / 3)}" '
                   f'text-anchor="end">{_num(v)}</text>')
    out.append("</g>")
    out.append(f'<text class="xlabel" x="{_num(left + pw / 2)}" y="{_num(style.height - 12)}" '
               f'font-size="{fs}" text-anchor="middle">{escape(grid.x_label)}</text>')
    out.append(f'<text class="ylabel" x="16" y="{_num(top + ph / 2)}" font-size="{fs}" '
               f'text-anchor="middle" transform="rotate(-90 16 {_num(top + ph / 2)})">'
               f'{escape(grid.y_label)}</text>')
    # level curves: one path element per level, one subpath per polyline
    for cls, lines, color, dash in (
            ("nullify", grid.level_nullify, style.nullify_color, ""),
            ("significance", grid.level_significance, style.significance_color,
             ' stroke-dasharray="6 4"')):
        if not lines:
            continue
        d = " ".join("M " + " L ".join(f"{_num(px(a))} {_num(py(b))}" for a, b in line)
                     for line in lines)
        out.append(f'<path class="{cls}" d="{d}" fill="none" stroke="{color}" '
                   f'stroke-width="2"{dash}/>')
    # benchmark markers
    for k, m in enumerate(grid.benchmarks):
        cx, cy = px(m.point.assoc_treatment), py(m.point.assoc_outcome)
        label = escape(m.point.label or f"benchmark {k + 1}")
        shape = "rect" if m.out_of_range else "circle"
        if shape == "circle":
            body = f'<circle cx="{_num(cx)}" cy="{_num(cy)}" r="4" fill="{style.marker_color}"/>'
        else:
            body = (f'<rect x="{_num(cx - 4)}" y="{_num(cy - 4)}" width="8" height="8" '
                    f'fill="none" stroke="{style.marker_color}"/>')
        out.append(f'<g class="benchmark">{body}<text x="{_num(cx + 7)}" y="{_num(cy - 7)}" '
                   f'font-size="{fs}">{label} ({_num(m.adjusted_estimate)})</text></g>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


__all__ = ["SvgStyle", "render_contour_svg"]
