"""CSV tables and hand-written SVG line plots.

Floats are written with ``repr``, the shortest decimal string that reads
back to the same double, so repeated runs give byte-identical files.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

CURVE_COLUMNS = ("param", "u", "v", "x", "y", "z", "time")


def fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(x) for x in row])
    return path


def write_curve_csv(path, curve) -> Path:
    pts = curve.points
    rows = zip(curve.param, curve.u, curve.v, pts[:, 0], pts[:, 1], pts[:, 2], curve.time)
    return write_table(path, CURVE_COLUMNS, rows)


def read_curve_csv(path) -> dict:
    """Columns of a curve CSV as float arrays keyed by header name."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(x) for x in row] for row in reader if row]
    if not {"u", "v"} <= set(header):
        raise ValueError(f"{path}: curve CSV needs u and v columns")
    arr = np.array(data, dtype=float).reshape(-1, len(header))
    return {name: arr[:, i] for i, name in enumerate(header)}


# -- SVG ----------------------------------------------------------------------

@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str = ""
    color: str = "#1f4e9c"
    dashed: bool = False
    width: float = 1.6


@dataclass
class Figure:
    """Single-axes line plot.

    Data are mapped to pixels with one common scale for both axes (equal
    aspect), centered in the plotting area; the y axis points up.
    """

    title: str = ""
    xlabel: str = "x"
    ylabel: str = "y"
    width: int = 640
    height: int = 480
    margin: int = 56
    series: list = field(default_factory=list)

    def add(self, *args, **kwargs) -> "Figure":
        self.series.append(Series(*args, **kwargs))
        return self

    def _bounds(self):
        xs = np.concatenate([np.asarray(s.x, float) for s in self.series])
        ys = np.concatenate([np.asarray(s.y, float) for s in self.series])
        ok = np.isfinite(xs) & np.isfinite(ys)
        if not ok.any():
            return (0.0, 1.0), (0.0, 1.0)
        x0, x1 = float(xs[ok].min()), float(xs[ok].max())
        y0, y1 = float(ys[ok].min()), float(ys[ok].max())
        span = max(x1 - x0, y1 - y0, 1e-12)
        return (x0 - 0.02 * span, x1 + 0.02 * span), (y0 - 0.02 * span, y1 + 0.02 * span)

    def render(self) -> str:
        (x0, x1), (y0, y1) = self._bounds()
        pw = self.width - 2 * self.margin
        ph = self.height - 2 * self.margin
        scale = min(pw / max(x1 - x0, 1e-300), ph / max(y1 - y0, 1e-300))
        ox = self.margin + 0.5 * (pw - scale * (x1 - x0))
        oy = self.margin + 0.5 * (ph + scale * (y1 - y0))

        def px(x):
            return ox + scale * (x - x0)

        def py(y):
            return oy - scale * (y - y0)

        out = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f"<!-- equal-aspect scale {scale!r} px per unit; data x in [{x0!r}, {x1!r}], "
            f"y in [{y0!r}, {y1!r}]; y axis points up -->",
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">',
            f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
            f'<rect x="{self.margin}" y="{self.margin}" width="{pw}" height="{ph}" '
            'fill="none" stroke="#888" stroke-width="0.8"/>',
        ]
        vis_x = (x0 - (ox - self.margin) / scale, x0 + (self.margin + pw - ox) / scale)
        vis_y = (y0 - (self.margin + ph - oy) / scale, y0 + (oy - self.margin) / scale)
        for t in nice_ticks(*vis_x):
            X = px(t)
            if self.margin <= X <= self.margin + pw:
                out.append(f'<line x1="{X:.2f}" y1="{self.margin + ph}" x2="{X:.2f}" '
                           f'y2="{self.margin + ph + 5}" stroke="#888"/>')
                out.append(f'<text x="{X:.2f}" y="{self.margin + ph + 18}" font-size="11" '
                           f'text-anchor="middle">{t:g}</text>')
        for t in nice_ticks(*vis_y):
            Y = py(t)
            if self.margin <= Y <= self.margin + ph:
                out.append(f'<line x1="{self.margin - 5}" y1="{Y:.2f}" x2="{self.margin}" '
                           f'y2="{Y:.2f}" stroke="#888"/>')
                out.append(f'<text x="{self.margin - 8}" y="{Y + 4:.2f}" font-size="11" '
                           f'text-anchor="end">{t:g}</text>')
        for s in self.series:
            for run in _finite_runs(np.asarray(s.x, float), np.asarray(s.y, float)):
                d = " ".join(f"{'M' if i == 0 else 'L'}{px(a):.3f},{py(b):.3f}"
                             for i, (a, b) in enumerate(run))
                dash = ' stroke-dasharray="6,4"' if s.dashed else ""
                out.append(f'<path d="{d}" fill="none" stroke="{s.color}" '
                           f'stroke-width="{s.width}"{dash}/>')
        labelled = [s for s in self.series if s.label]
        for i, s in enumerate(labelled):
            y = self.margin + 14 + 16 * i
            x = self.margin + pw - 150
            dash = ' stroke-dasharray="6,4"' if s.dashed else ""
            out.append(f'<line x1="{x}" y1="{y}" x2="{x + 24}" y2="{y}" stroke="{s.color}" '
                       f'stroke-width="{s.width}"{dash}/>')
            out.append(f'<text x="{x + 30}" y="{y + 4}" font-size="11">{_escape(s.label)}</text>')
        out.append(f'<text x="{self.width / 2}" y="{self.margin / 2}" font-size="14" '
                   f'text-anchor="middle">{_escape(self.title)}</text>')
        out.append(f'<text x="{self.width / 2}" y="{self.height - 12}" font-size="12" '
                   f'text-anchor="middle">{_escape(self.xlabel)}</text>')
        out.append(f'<text x="14" y="{self.height / 2}" font-size="12" text-anchor="middle" '
                   f'transform="rotate(-90 14 {self.height / 2})">{_escape(self.ylabel)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.render())
        return path


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _finite_runs(x, y):
    ok = np.isfinite(x) & np.isfinite(y)
    start = None
    for i, good in enumerate(np.append(ok, False)):
        if good and start is None:
            start = i
        elif not good and start is not None:
            if i - start >= 2:
                yield list(zip(x[start:i], y[start:i]))
            start = None


def nice_ticks(lo: float, hi: float, target: int = 6) -> list:
    if not hi > lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    return [round(first + k * step, 12) for k in range(int((hi - first) / step) + 1)]


def orthographic(points: np.ndarray, azimuth: float = -60.0, elevation: float = 25.0) -> np.ndarray:
    """Project 3D points onto the screen plane of a camera at the given angles (degrees)."""
    az, el = math.radians(azimuth), math.radians(elevation)
    right = np.array([-math.sin(az), math.cos(az), 0.0])
    up = np.array([-math.sin(el) * math.cos(az), -math.sin(el) * math.sin(az), math.cos(el)])
    pts = np.asarray(points, dtype=float)
    return np.column_stack([pts @ right, pts @ up])


def curve_figures(curves: Sequence, labels: Optional[Sequence[str]] = None,
                  dashed: Optional[Sequence[bool]] = None, title: str = ""):
    """Chart-coordinate figure and orthographic 3D figure for a set of curves."""
    palette = ("#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d68910", "#17a589")
    labels = labels or [""] * len(curves)
    dashed = dashed or [False] * len(curves)
    chart = Figure(title=title, xlabel="u", ylabel="v")
    space = Figure(title=title, xlabel="screen x", ylabel="screen y")
    for i, (c, lab, dsh) in enumerate(zip(curves, labels, dashed)):
        color = palette[i % len(palette)]
        chart.add(np.asarray(c.u), np.asarray(c.v), label=lab, color=color, dashed=dsh)
        proj = orthographic(c.points)
        space.add(proj[:, 0], proj[:, 1], label=lab, color=color, dashed=dsh)
    return chart, space
