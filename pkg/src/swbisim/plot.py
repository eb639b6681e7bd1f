"""Planar SVG figures: state space, level sets, regions and trajectories."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .abstraction import ProblemSpec
from .geometry import GeometryError, Region, vertices_2d
from .lyapunov import sublevel_polytope

_PALETTE = ["#e6a23c", "#67c23a", "#409eff", "#f56c6c", "#909399", "#b37feb"]


class PlotError(ValueError):
    pass


class _Canvas:
    def __init__(self, lo, hi, size=640, pad=30):
        self.lo, self.hi = np.asarray(lo, float), np.asarray(hi, float)
        span = (self.hi - self.lo).max()
        self.scale = (size - 2 * pad) / span
        self.pad = pad
        self.w = int(round((self.hi[0] - self.lo[0]) * self.scale + 2 * pad))
        self.h = int(round((self.hi[1] - self.lo[1]) * self.scale + 2 * pad))
        self.parts = []

    def xy(self, p):
        x = self.pad + (p[0] - self.lo[0]) * self.scale
        y = self.h - self.pad - (p[1] - self.lo[1]) * self.scale
        return f"{x:.2f},{y:.2f}"

    def polygon(self, pts, fill, stroke, width=1.0, opacity=1.0):
        path = " ".join(self.xy(p) for p in pts)
        self.parts.append(
            f'<polygon points="{path}" fill="{fill}" fill-opacity="{opacity:g}" '
            f'stroke="{stroke}" stroke-width="{width:g}"/>'
        )

    def polyline(self, pts, stroke, width=1.5):
        path = " ".join(self.xy(p) for p in pts)
        self.parts.append(
            f'<polyline points="{path}" fill="none" stroke="{stroke}" stroke-width="{width:g}"/>'
        )

    def dot(self, p, r, fill):
        x, y = self.xy(p).split(",")
        self.parts.append(f'<circle cx="{x}" cy="{y}" r="{r:g}" fill="{fill}"/>')

    def text(self, p, s, size=12):
        x, y = self.xy(p).split(",")
        self.parts.append(f'<text x="{x}" y="{y}" font-size="{size}" font-family="sans-serif">{escape(s)}</text>')

    def group(self, name):
        self.parts.append(f'<g id="{escape(name)}">')

    def end(self):
        self.parts.append("</g>")

    def svg(self, title=None):
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w}" height="{self.h}" '
            f'viewBox="0 0 {self.w} {self.h}">'
        )
        body = [head]
        if title:
            body.append(f"<title>{escape(title)}</title>")
        body.append(f'<rect width="{self.w}" height="{self.h}" fill="white"/>')
        body.extend(self.parts)
        body.append("</svg>")
        return "\n".join(body) + "\n"


def _cell_polygons(region: Region):
    out = []
    for c in region.cells:
        try:
            out.append(vertices_2d(c))
        except GeometryError:
            continue  # slivers below drawing resolution
    return out


def render_svg(spec: ProblemSpec, gammas=(), highlight: Region | None = None,
               partition=None, trajectories=(), title: str | None = None,
               highlight_color: str = "#8e44ad") -> str:
    """Layered figure of a planar problem.

    ``gammas`` draws level-set boundaries, ``highlight`` fills a region,
    ``partition`` outlines a list of regions, ``trajectories`` adds polylines.
    """
    if spec.n != 2:
        raise PlotError(f"plots need a planar system, got dimension {spec.n}")
    Xv = vertices_2d(spec.X)
    lo, hi = Xv.min(axis=0), Xv.max(axis=0)
    margin = 0.05 * (hi - lo).max()
    cv = _Canvas(lo - margin, hi + margin)

    cv.group("X")
    cv.polygon(Xv, "#f7f7f7", "#333333", 1.5)
    cv.end()
    cv.group("levels")
    for g in gammas:
        cv.polygon(vertices_2d(sublevel_polytope(spec.lf.L, g)), "none", "#bbbbbb", 0.6)
    cv.end()
    cv.group("D")
    cv.polygon(vertices_2d(spec.D), "#d0e6f7", "#1f5f99", 1.2, 0.8)
    cv.end()
    cv.group("regions")
    centers = []
    for k, (name, P) in enumerate(spec.regions.items()):
        pts = vertices_2d(P)
        cv.polygon(pts, _PALETTE[k % len(_PALETTE)], "#222222", 1.0, 0.5)
        centers.append((name, pts.mean(axis=0)))
    cv.end()
    if highlight is not None and highlight:
        cv.group("highlight")
        for pts in _cell_polygons(highlight):
            cv.polygon(pts, highlight_color, highlight_color, 0.3, 0.55)
        cv.end()
    if partition:
        cv.group("partition")
        for r in partition:
            for pts in _cell_polygons(r):
                cv.polygon(pts, "none", "#999999", 0.3)
        cv.end()
    cv.group("labels")
    cv.text(np.zeros(2), "D", 14)
    for name, c in centers:
        cv.text(c, name, 13)
    cv.end()
    if trajectories:
        cv.group("trajectories")
        for traj in trajectories:
            traj = np.asarray(traj, dtype=float)
            cv.polyline(traj, "#c0392b")
            cv.dot(traj[0], 3, "#c0392b")
            cv.dot(traj[-1], 3, "#1f5f99")
        cv.end()
    return cv.svg(title)
