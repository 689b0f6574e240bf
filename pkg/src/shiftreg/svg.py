"""Minimal SVG 1.1 emitter for study reports.

One grouped bar chart: a group of bars per grid cell (one bar per method),
the binomial band drawn as a shaded horizontal stripe behind the bars, and
the nominal level as a dashed line. Pure string assembly, no dependencies;
the output is deterministic for a given report and parses as XML.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

_PALETTE = ("#4878a8", "#e1812c", "#3a923a", "#c03d3e", "#9372b2",
            "#845b53", "#d684bd", "#797979", "#b9bc3f", "#56b4c9")

_MARGIN_L = 62.0
_MARGIN_R = 18.0
_MARGIN_T = 46.0
_MARGIN_B = 92.0
_BAR_W = 26.0
_BAR_GAP = 6.0
_GROUP_GAP = 30.0
_PLOT_H = 300.0


def _fmt(v: float) -> str:
    s = f"{v:.2f}"
    return s.rstrip("0").rstrip(".") if "." in s else s


def render_study_svg(report) -> str:
    """Render a StudyReport as an SVG document string."""
    cells = report.cells
    if not cells:
        raise ValueError("report has no cells to plot")

    methods = list(report.spec.methods)
    groups: list = []
    for c in cells:
        key = (c.design, c.trend, c.scenario)
        if not groups or groups[-1][0] != key:
            groups.append((key, []))
        groups[-1][1].append(c)

    group_w = len(methods) * _BAR_W + (len(methods) - 1) * _BAR_GAP
    plot_w = len(groups) * group_w + (len(groups) + 1) * _GROUP_GAP
    width = _MARGIN_L + plot_w + _MARGIN_R
    height = _MARGIN_T + _PLOT_H + _MARGIN_B

    rates = [c.rate for c in cells if c.rate is not None]
    top = max([0.1, report.band[1] * 1.3] + [r * 1.15 for r in rates])

    def ry(value: float) -> float:
        return _MARGIN_T + _PLOT_H * (1.0 - value / top)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        f'<rect x="0" y="0" width="{_fmt(width)}" height="{_fmt(height)}" fill="#ffffff"/>',
    ]

    title = report.spec.label or "rejection rates"
    out.append(f'<text x="{_fmt(width / 2)}" y="24" font-family="sans-serif" '
               f'font-size="15" text-anchor="middle">{escape(title)}</text>')

    # band stripe + nominal level
    lo, hi = report.band
    out.append(f'<rect x="{_fmt(_MARGIN_L)}" y="{_fmt(ry(hi))}" '
               f'width="{_fmt(plot_w)}" height="{_fmt(ry(lo) - ry(hi))}" '
               f'fill="#d0d0d0" fill-opacity="0.55"/>')
    out.append(f'<line x1="{_fmt(_MARGIN_L)}" y1="{_fmt(ry(report.spec.alpha))}" '
               f'x2="{_fmt(_MARGIN_L + plot_w)}" y2="{_fmt(ry(report.spec.alpha))}" '
               f'stroke="#555555" stroke-width="1" stroke-dasharray="5,4"/>')

    # y axis with ticks at round values
    out.append(f'<line x1="{_fmt(_MARGIN_L)}" y1="{_fmt(_MARGIN_T)}" '
               f'x2="{_fmt(_MARGIN_L)}" y2="{_fmt(_MARGIN_T + _PLOT_H)}" '
               f'stroke="#000000" stroke-width="1"/>')
    step = 0.05 if top <= 0.5 else (0.1 if top <= 1.0 else 0.2)
    tick = 0.0
    while tick <= top + 1e-9:
        y = ry(tick)
        out.append(f'<line x1="{_fmt(_MARGIN_L - 4)}" y1="{_fmt(y)}" '
                   f'x2="{_fmt(_MARGIN_L)}" y2="{_fmt(y)}" '
                   f'stroke="#000000" stroke-width="1"/>')
        out.append(f'<text x="{_fmt(_MARGIN_L - 8)}" y="{_fmt(y + 4)}" '
                   f'font-family="sans-serif" font-size="11" '
                   f'text-anchor="end">{tick:.2f}</text>')
        tick += step
    out.append(f'<text x="16" y="{_fmt(_MARGIN_T + _PLOT_H / 2)}" '
               f'font-family="sans-serif" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 16 {_fmt(_MARGIN_T + _PLOT_H / 2)})">'
               'rejection rate</text>')

    # bars
    x = _MARGIN_L + _GROUP_GAP
    for (design, trend, scenario), members in groups:
        for i, c in enumerate(members):
            color = _PALETTE[methods.index(c.method) % len(_PALETTE)]
            bx = x + i * (_BAR_W + _BAR_GAP)
            if c.rate is None:
                out.append(f'<text x="{_fmt(bx + _BAR_W / 2)}" '
                           f'y="{_fmt(_MARGIN_T + _PLOT_H - 6)}" '
                           f'font-family="sans-serif" font-size="10" '
                           f'text-anchor="middle" fill="#c03d3e">n/a</text>')
            else:
                y = ry(c.rate)
                out.append(f'<rect x="{_fmt(bx)}" y="{_fmt(y)}" '
                           f'width="{_fmt(_BAR_W)}" '
                           f'height="{_fmt(_MARGIN_T + _PLOT_H - y)}" '
                           f'fill="{color}"/>')
        cx = x + group_w / 2
        base = _MARGIN_T + _PLOT_H
        label = scenario if len(groups) > 1 else f"{scenario} {trend}"
        out.append(f'<text x="{_fmt(cx)}" y="{_fmt(base + 16)}" '
                   f'font-family="sans-serif" font-size="11" '
                   f'text-anchor="middle">{escape(label)}</text>')
        if len(groups) > 1:
            out.append(f'<text x="{_fmt(cx)}" y="{_fmt(base + 30)}" '
                       f'font-family="sans-serif" font-size="10" fill="#555555" '
                       f'text-anchor="middle">{escape(trend)}</text>')
        x += group_w + _GROUP_GAP

    # x axis line
    out.append(f'<line x1="{_fmt(_MARGIN_L)}" y1="{_fmt(_MARGIN_T + _PLOT_H)}" '
               f'x2="{_fmt(_MARGIN_L + plot_w)}" y2="{_fmt(_MARGIN_T + _PLOT_H)}" '
               f'stroke="#000000" stroke-width="1"/>')

    # legend under the group labels
    ly = _MARGIN_T + _PLOT_H + 52
    lx = _MARGIN_L
    for i, m in enumerate(methods):
        color = _PALETTE[i % len(_PALETTE)]
        out.append(f'<rect x="{_fmt(lx)}" y="{_fmt(ly - 9)}" width="12" '
                   f'height="12" fill="{color}"/>')
        text = escape(m.label)
        out.append(f'<text x="{_fmt(lx + 16)}" y="{_fmt(ly + 1)}" '
                   f'font-family="sans-serif" font-size="11">{text}</text>')
        lx += 16 + 7.0 * len(m.label) + 24
        if lx > width - 120 and i + 1 < len(methods):
            lx = _MARGIN_L
            ly += 18

    out.append("</svg>")
    return "\n".join(out) + "\n"
