"""Minimal SVG step-plot writer for empirical CDFs.

Deliberately dependency-free: the output is a fixed-size plot with axis
ticks, the step path of the CDF, and a shaded one-standard-error band.
Coordinates are formatted to two decimals so output is byte-stable.
"""

from __future__ import annotations

import math

__all__ = ["step_plot_svg"]

_MARGIN_LEFT = 62.0
_MARGIN_RIGHT = 16.0
_MARGIN_TOP = 34.0
_MARGIN_BOTTOM = 46.0


def _nice_step(span: float, target: int = 5) -> float:
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if mult * mag >= raw:
            return mult * mag
    return 10.0 * mag


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _tick_label(v: float) -> str:
    if v == int(v):
        return str(int(v))
    return f"{v:g}"


def step_plot_svg(
    cdf,
    title: str = "",
    x_label: str = "t",
    y_label: str = "fraction",
    width: int = 640,
    height: int = 400,
) -> str:
    bp = cdf.breakpoints
    frac = cdf.fractions
    err = cdf.stderr
    x_max = float(bp[-1]) * 1.05 if bp[-1] > 0 else 1.0
    plot_w = width - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = height - _MARGIN_TOP - _MARGIN_BOTTOM

    def x_of(t: float) -> float:
        return _MARGIN_LEFT + max(0.0, min(t, x_max)) / x_max * plot_w

    def y_of(f: float) -> float:
        return height - _MARGIN_BOTTOM - f * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]

    # Grid and ticks.
    xstep = _nice_step(x_max)
    ticks_x = []
    v = 0.0
    while v <= x_max + 1e-9:
        ticks_x.append(v)
        v += xstep
    ticks_y = [i / 5.0 for i in range(6)]
    grid = ['<g stroke="#dddddd" stroke-width="1">']
    for v in ticks_x:
        grid.append(
            f'<line x1="{_fmt(x_of(v))}" y1="{_fmt(y_of(0.0))}" '
            f'x2="{_fmt(x_of(v))}" y2="{_fmt(y_of(1.0))}"/>'
        )
    for f in ticks_y:
        grid.append(
            f'<line x1="{_fmt(_MARGIN_LEFT)}" y1="{_fmt(y_of(f))}" '
            f'x2="{_fmt(width - _MARGIN_RIGHT)}" y2="{_fmt(y_of(f))}"/>'
        )
    grid.append("</g>")
    parts.extend(grid)

    # Standard-error band: step outline of f+e forward, f-e backward.
    pts = []
    n = len(bp)
    for i in range(n):
        hi = min(float(frac[i] + err[i]), 1.0)
        x0 = x_of(float(bp[i]))
        x1 = x_of(float(bp[i + 1])) if i + 1 < n else x_of(x_max)
        pts.append(f"{_fmt(x0)},{_fmt(y_of(hi))}")
        pts.append(f"{_fmt(x1)},{_fmt(y_of(hi))}")
    for i in range(n - 1, -1, -1):
        lo = max(float(frac[i] - err[i]), 0.0)
        x0 = x_of(float(bp[i]))
        x1 = x_of(float(bp[i + 1])) if i + 1 < n else x_of(x_max)
        pts.append(f"{_fmt(x1)},{_fmt(y_of(lo))}")
        pts.append(f"{_fmt(x0)},{_fmt(y_of(lo))}")
    parts.append(f'<polygon points="{" ".join(pts)}" fill="#aecbe8" fill-opacity="0.7"/>')

    # The CDF itself: zero until the first breakpoint, then right-continuous steps.
    path = [f"M {_fmt(x_of(0.0))} {_fmt(y_of(0.0))}", f"H {_fmt(x_of(float(bp[0])))}"]
    for i in range(n):
        path.append(f"V {_fmt(y_of(float(frac[i])))}")
        nxt = x_of(float(bp[i + 1])) if i + 1 < n else x_of(x_max)
        path.append(f"H {_fmt(nxt)}")
    parts.append(
        f'<path d="{" ".join(path)}" fill="none" stroke="#1f5fa8" stroke-width="1.5"/>'
    )

    # Axes on top of the grid.
    parts.append(
        f'<g stroke="#222222" stroke-width="1">'
        f'<line x1="{_fmt(_MARGIN_LEFT)}" y1="{_fmt(y_of(0.0))}" '
        f'x2="{_fmt(width - _MARGIN_RIGHT)}" y2="{_fmt(y_of(0.0))}"/>'
        f'<line x1="{_fmt(_MARGIN_LEFT)}" y1="{_fmt(y_of(0.0))}" '
        f'x2="{_fmt(_MARGIN_LEFT)}" y2="{_fmt(y_of(1.0))}"/></g>'
    )
    labels = ['<g font-family="monospace" font-size="12" fill="#222222">']
    for v in ticks_x:
        labels.append(
            f'<text x="{_fmt(x_of(v))}" y="{_fmt(y_of(0.0) + 16)}" '
            f'text-anchor="middle">{_tick_label(v)}</text>'
        )
    for f in ticks_y:
        labels.append(
            f'<text x="{_fmt(_MARGIN_LEFT - 8)}" y="{_fmt(y_of(f) + 4)}" '
            f'text-anchor="end">{_tick_label(f)}</text>'
        )
    labels.append(
        f'<text x="{_fmt(_MARGIN_LEFT + plot_w / 2)}" y="{_fmt(height - 10)}" '
        f'text-anchor="middle">{x_label}</text>'
    )
    labels.append(
        f'<text x="14" y="{_fmt(_MARGIN_TOP + plot_h / 2)}" text-anchor="middle" '
        f'transform="rotate(-90 14 {_fmt(_MARGIN_TOP + plot_h / 2)})">{y_label}</text>'
    )
    if title:
        labels.append(
            f'<text x="{_fmt(_MARGIN_LEFT + plot_w / 2)}" y="20" '
            f'text-anchor="middle" font-size="14">{title}</text>'
        )
    labels.append("</g>")
    parts.extend(labels)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
