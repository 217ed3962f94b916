"""Minimal deterministic SVG line plots.

The harness emits figures directly as SVG text so that output bytes are a
pure function of the plotted data (no plotting library, no timestamps).
"""

from __future__ import annotations

import numpy as np

WIDTH, HEIGHT = 640, 440
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50

PALETTE = {
    "truth": "#222222",
    "ogd": "#1f77b4",
    "onm": "#d62728",
    "xhat": "#2ca02c",
    "sensors": "#7f7f7f",
}


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = np.linspace(lo, hi, count)
    return [float(v) for v in raw]


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1000 or abs(v) < 0.01:
        return f"{v:.1e}"
    return f"{v:.3g}"


class LinePlot:
    """Accumulates labelled series and renders one SVG chart."""

    def __init__(self, title: str, xlabel: str, ylabel: str):
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.series: list[tuple[str, np.ndarray, np.ndarray, str, bool]] = []
        self.markers: list[tuple[np.ndarray, np.ndarray, str]] = []

    def add_line(self, label: str, x, y, color: str, dashed: bool = False):
        self.series.append((label, np.asarray(x, float), np.asarray(y, float), color, dashed))

    def add_markers(self, x, y, color: str):
        self.markers.append((np.asarray(x, float), np.asarray(y, float), color))

    def _bounds(self):
        xs = np.concatenate([s[1] for s in self.series] + [m[0] for m in self.markers])
        ys = np.concatenate([s[2] for s in self.series] + [m[1] for m in self.markers])
        x0, x1 = float(np.min(xs)), float(np.max(xs))
        y0, y1 = float(np.min(ys)), float(np.max(ys))
        if x1 == x0:
            x1 = x0 + 1.0
        if y1 == y0:
            y1 = y0 + 1.0
        pad = 0.04 * (y1 - y0)
        return x0, x1, y0 - pad, y1 + pad

    def render(self) -> str:
        x0, x1, y0, y1 = self._bounds()
        iw = WIDTH - MARGIN_L - MARGIN_R
        ih = HEIGHT - MARGIN_T - MARGIN_B

        def sx(x):
            return MARGIN_L + (x - x0) / (x1 - x0) * iw

        def sy(y):
            return MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * ih

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" '
            f'font-family="sans-serif" font-size="15">{self.title}</text>',
        ]
        # axes box and ticks
        parts.append(
            f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{iw}" height="{ih}" '
            f'fill="none" stroke="#444" stroke-width="1"/>'
        )
        for tx in _ticks(x0, x1):
            px = sx(tx)
            parts.append(
                f'<line x1="{_fmt(px)}" y1="{MARGIN_T + ih}" x2="{_fmt(px)}" '
                f'y2="{MARGIN_T + ih + 5}" stroke="#444"/>'
            )
            parts.append(
                f'<text x="{_fmt(px)}" y="{MARGIN_T + ih + 20}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="11">{_tick_label(tx)}</text>'
            )
        for ty in _ticks(y0, y1):
            py = sy(ty)
            parts.append(
                f'<line x1="{MARGIN_L - 5}" y1="{_fmt(py)}" x2="{MARGIN_L}" '
                f'y2="{_fmt(py)}" stroke="#444"/>'
            )
            parts.append(
                f'<text x="{MARGIN_L - 9}" y="{_fmt(py + 4)}" text-anchor="end" '
                f'font-family="sans-serif" font-size="11">{_tick_label(ty)}</text>'
            )
        parts.append(
            f'<text x="{MARGIN_L + iw / 2}" y="{HEIGHT - 12}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{self.xlabel}</text>'
        )
        parts.append(
            f'<text x="18" y="{MARGIN_T + ih / 2}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13" '
            f'transform="rotate(-90 18 {MARGIN_T + ih / 2})">{self.ylabel}</text>'
        )
        # data
        for label, x, y, color, dashed in self.series:
            pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, y))
            dash = ' stroke-dasharray="6,4"' if dashed else ""
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>'
            )
        for x, y, color in self.markers:
            for a, b in zip(x, y):
                parts.append(
                    f'<circle cx="{_fmt(sx(a))}" cy="{_fmt(sy(b))}" r="4" fill="{color}"/>'
                )
        # legend
        ly = MARGIN_T + 14
        for label, _, _, color, dashed in self.series:
            dash = ' stroke-dasharray="6,4"' if dashed else ""
            parts.append(
                f'<line x1="{MARGIN_L + 10}" y1="{ly - 4}" x2="{MARGIN_L + 38}" '
                f'y2="{ly - 4}" stroke="{color}" stroke-width="1.5"{dash}/>'
            )
            parts.append(
                f'<text x="{MARGIN_L + 44}" y="{ly}" font-family="sans-serif" '
                f'font-size="12">{label}</text>'
            )
            ly += 17
        parts.append("</svg>")
        return "\n".join(parts) + "\n"
