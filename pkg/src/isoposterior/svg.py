"""Minimal standalone SVG figures: scatter, labelled polylines, step plots."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

__all__ = ["Figure"]

_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    raw = (hi - lo) / max(n, 1)
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    return np.arange(np.ceil(lo / step) * step, hi + 1e-9 * step, step)


class Figure:
    """One axes box in data coordinates, rendered to SVG text."""

    def __init__(self, x_range, y_range, width=640, height=560, margin=56, title="", xlabel="x1", ylabel="x2"):
        self.x0, self.x1 = map(float, x_range)
        self.y0, self.y1 = map(float, y_range)
        self.w, self.h, self.m = width, height, margin
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self._body: list[str] = []

    def _px(self, x, y):
        sx = self.m + (np.asarray(x) - self.x0) / (self.x1 - self.x0) * (self.w - 2 * self.m)
        sy = self.h - self.m - (np.asarray(y) - self.y0) / (self.y1 - self.y0) * (self.h - 2 * self.m)
        return sx, sy

    def scatter(self, points, colors, radius=1.6, opacity=0.5, group="data"):
        P = np.asarray(points, dtype=float)
        sx, sy = self._px(P[:, 0], P[:, 1])
        out = [f'<g id="{escape(group)}" fill-opacity="{opacity}">']
        for x, y, c in zip(sx.tolist(), sy.tolist(), colors):
            out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{radius}" fill="{c}"/>')
        out.append("</g>")
        self._body.extend(out)

    def polylines(self, polys, label: str, color: str, width=1.4, step=False):
        out = [f'<g class="level" data-label="{escape(label)}" stroke="{color}" fill="none" stroke-width="{width}">']
        for poly in polys:
            P = np.asarray(poly, dtype=float)
            if len(P) == 0:
                continue
            if step and len(P) > 1:
                # hold each value until the next abscissa
                xs = np.repeat(P[:, 0], 2)[1:]
                ys = np.repeat(P[:, 1], 2)[:-1]
                P = np.column_stack([xs, ys])
            sx, sy = self._px(P[:, 0], P[:, 1])
            pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(sx.tolist(), sy.tolist()))
            out.append(f'<polyline points="{pts}"/>')
        if polys and len(polys[0]):
            # label at the middle vertex of the first polyline
            P = np.asarray(polys[0], dtype=float)
            sx, sy = self._px(*P[len(P) // 2])
            out.append(f'<text x="{float(sx) + 3:.2f}" y="{float(sy) - 3:.2f}" font-size="9" fill="{color}" stroke="none">{escape(label)}</text>')
        out.append("</g>")
        self._body.extend(out)

    def _axes(self) -> list[str]:
        m, w, h = self.m, self.w, self.h
        out = [f'<rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}" fill="none" stroke="#000"/>']
        for t in _ticks(self.x0, self.x1):
            sx, _ = self._px(t, self.y0)
            out.append(f'<line x1="{sx:.2f}" y1="{h - m}" x2="{sx:.2f}" y2="{h - m + 4}" stroke="#000"/>')
            out.append(f'<text x="{sx:.2f}" y="{h - m + 16}" font-size="10" text-anchor="middle">{t:g}</text>')
        for t in _ticks(self.y0, self.y1):
            _, sy = self._px(self.x0, t)
            out.append(f'<line x1="{m - 4}" y1="{sy:.2f}" x2="{m}" y2="{sy:.2f}" stroke="#000"/>')
            out.append(f'<text x="{m - 6}" y="{sy + 3:.2f}" font-size="10" text-anchor="end">{t:g}</text>')
        out.append(f'<text x="{w / 2}" y="{h - 12}" font-size="12" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(f'<text x="14" y="{h / 2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {h / 2})">{escape(self.ylabel)}</text>')
        if self.title:
            out.append(f'<text x="{w / 2}" y="{m / 2}" font-size="13" text-anchor="middle">{escape(self.title)}</text>')
        return out

    def render(self) -> str:
        m, w, h = self.m, self.w, self.h
        head = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">',
            f'<defs><clipPath id="plot"><rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}"/></clipPath></defs>',
            '<rect width="100%" height="100%" fill="#fff"/>',
            '<g clip-path="url(#plot)">',
        ]
        return "\n".join(head + self._body + ["</g>"] + self._axes() + ["</svg>"]) + "\n"


def level_color(k: int) -> str:
    return _PALETTE[k % len(_PALETTE)]
