"""Minimal deterministic SVG line charts.

All coordinates are written with fixed precision so identical inputs give
identical bytes.
"""
from __future__ import annotations

import math
from html import escape

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=20, top=40, bottom=55)
PALETTE = ("#1f4e79", "#c0504d", "#4f8a3c", "#7f6084")


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.floor(lo / step) * step
    ticks, t = [], start
    while t <= hi + step * 1e-9:
        ticks.append(round(t, 10))
        t += step
    return ticks


class Chart:
    """A single-panel x/y chart collecting SVG fragments."""

    def __init__(self, title: str, xlabel: str, ylabel: str, xs, ys_all, config_hash: str = ""):
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.config_hash = config_hash
        xs = list(xs)
        vals = [v for ys in ys_all for v in ys if v is not None and math.isfinite(v)]
        self.x0, self.x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
        if self.x1 == self.x0:
            self.x0, self.x1 = self.x0 - 1, self.x1 + 1
        lo, hi = (min(vals), max(vals)) if vals else (0.0, 1.0)
        pad = 0.08 * (hi - lo) if hi > lo else max(abs(hi), 1.0) * 0.1
        self.yticks = _nice_ticks(lo - pad, hi + pad)
        self.y0, self.y1 = self.yticks[0], self.yticks[-1]
        self.body = []

    def px(self, x: float) -> float:
        w = WIDTH - MARGIN["left"] - MARGIN["right"]
        return MARGIN["left"] + (x - self.x0) / (self.x1 - self.x0) * w

    def py(self, y: float) -> float:
        h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
        return MARGIN["top"] + (self.y1 - y) / (self.y1 - self.y0) * h

    def polyline(self, xs, ys, color: str, label: str, cls: str = "series"):
        pts = " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in zip(xs, ys)
                       if y is not None and math.isfinite(y))
        self.body.append(f'<polyline class="{cls}" data-label="{escape(label)}" points="{pts}" '
                         f'fill="none" stroke="{color}" stroke-width="1.5"/>')

    def square(self, x: float, y: float, filled: bool, size: float = 8.0):
        cls = "marker sig" if filled else "marker"
        fill = "black" if filled else "white"
        self.body.append(f'<rect class="{cls}" x="{_fmt(self.px(x) - size / 2)}" '
                         f'y="{_fmt(self.py(y) - size / 2)}" width="{_fmt(size)}" '
                         f'height="{_fmt(size)}" fill="{fill}" stroke="black" stroke-width="1"/>')

    def whisker(self, x: float, lo: float, hi: float):
        self.body.append(f'<line class="ci" x1="{_fmt(self.px(x))}" y1="{_fmt(self.py(lo))}" '
                         f'x2="{_fmt(self.px(x))}" y2="{_fmt(self.py(hi))}" stroke="#888888" '
                         f'stroke-width="1"/>')

    def hline(self, y: float):
        if self.y0 <= y <= self.y1:
            self.body.append(f'<line class="zero" x1="{_fmt(self.px(self.x0))}" y1="{_fmt(self.py(y))}" '
                             f'x2="{_fmt(self.px(self.x1))}" y2="{_fmt(self.py(y))}" '
                             f'stroke="#999999" stroke-dasharray="4 3"/>')

    def legend(self, entries):
        x = MARGIN["left"] + 10
        for i, (label, color) in enumerate(entries):
            y = MARGIN["top"] + 14 + 16 * i
            self.body.append(f'<line x1="{x}" y1="{y}" x2="{x + 18}" y2="{y}" stroke="{color}" '
                             f'stroke-width="2"/>')
            self.body.append(f'<text x="{x + 24}" y="{y + 4}" font-size="11">{escape(label)}</text>')

    def render(self, xticks) -> str:
        left, top = MARGIN["left"], MARGIN["top"]
        right, bottom = WIDTH - MARGIN["right"], HEIGHT - MARGIN["bottom"]
        out = ['<?xml version="1.0" encoding="UTF-8"?>',
               f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
               f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">']
        if self.config_hash:
            out.append(f"<!-- config_hash: {self.config_hash} -->")
        out.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
        out.append(f'<text x="{WIDTH / 2:.1f}" y="22" font-size="14" text-anchor="middle">'
                   f'{escape(self.title)}</text>')
        out.append(f'<rect class="frame" x="{left}" y="{top}" width="{right - left}" '
                   f'height="{bottom - top}" fill="none" stroke="black"/>')
        for t in self.yticks:
            y = _fmt(self.py(t))
            out.append(f'<line x1="{left - 4}" y1="{y}" x2="{left}" y2="{y}" stroke="black"/>')
            out.append(f'<text x="{left - 7}" y="{y}" font-size="10" text-anchor="end" '
                       f'dominant-baseline="middle">{t:g}</text>')
        for t in xticks:
            x = _fmt(self.px(t))
            out.append(f'<line x1="{x}" y1="{bottom}" x2="{x}" y2="{bottom + 4}" stroke="black"/>')
            out.append(f'<text x="{x}" y="{bottom + 16}" font-size="10" text-anchor="middle">{t:g}</text>')
        out.append(f'<text x="{(left + right) / 2:.1f}" y="{HEIGHT - 14}" font-size="12" '
                   f'text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(f'<text x="16" y="{(top + bottom) / 2:.1f}" font-size="12" text-anchor="middle" '
                   f'transform="rotate(-90 16 {(top + bottom) / 2:.1f})">{escape(self.ylabel)}</text>')
        out.extend(self.body)
        out.append("</svg>")
        return "\n".join(out) + "\n"


def coefficient_chart(variable: str, ks, coefs, pvalues, ses=None, config_hash: str = "",
                      alpha: float = 0.05) -> str:
    """Coefficient against horizon; filled black squares mark ``p < alpha``."""
    ks = list(ks)
    spans = []
    if ses is not None:
        spans = [[c - 1.96 * s, c + 1.96 * s] for c, s in zip(coefs, ses)
                 if c is not None and s is not None and math.isfinite(s)]
    chart = Chart(f"{variable} effect on change in Fiedler value", "window size k",
                  "coefficient", ks, [coefs, *spans], config_hash)
    chart.hline(0.0)
    if spans:
        for k, c, s in zip(ks, coefs, ses):
            if c is not None and s is not None and math.isfinite(s):
                chart.whisker(k, c - 1.96 * s, c + 1.96 * s)
    chart.polyline(ks, coefs, PALETTE[0], variable)
    for k, c, p in zip(ks, coefs, pvalues):
        if c is not None and math.isfinite(c):
            chart.square(k, c, filled=p is not None and p < alpha)
    return chart.render(ks)


def r2_chart(ks, series: dict, config_hash: str = "") -> str:
    """One polyline of R^2 against k per model."""
    ks = list(ks)
    chart = Chart("R² by window size", "window size k", "R²", ks, list(series.values()),
                  config_hash)
    for i, (label, ys) in enumerate(series.items()):
        chart.polyline(ks, ys, PALETTE[i % len(PALETTE)], label)
    chart.legend([(label, PALETTE[i % len(PALETTE)]) for i, label in enumerate(series)])
    return chart.render(ks)
