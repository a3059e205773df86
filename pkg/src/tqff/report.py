"""Report emission: CSV tables, minimal SVG line plots, run manifests.

All writes are atomic (temp file then rename).  Figures are derived views
of already-written tables and never feed back into them.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
            "#8c564b", "#17becf", "#7f7f7f")


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def atomic_write(path, text: str):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def render_csv(header, rows, preamble=()) -> str:
    import io

    buf = io.StringIO()
    for line in preamble:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _fmt(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.0e}"
    return f"{v:g}"


def svg_line_plot(series, title="", xlabel="", ylabel="", logy=False,
                  logx=False, width=720, height=460, markers=True) -> str:
    """Minimal multi-series line plot.  ``series`` is a list of
    (label, x array, y array) triples.  Log axes drop non-positive points."""
    ml, mr, mt, mb = 70, 160, 34, 50
    pw, ph = width - ml - mr, height - mt - mb

    def tx(v):
        return math.log10(v) if logx else v

    def ty(v):
        return math.log10(v) if logy else v

    pts = []
    for _, xs, ys in series:
        for x, y in zip(np.asarray(xs, float), np.asarray(ys, float)):
            if not (math.isfinite(x) and math.isfinite(y)):
                continue
            if (logx and x <= 0) or (logy and y <= 0):
                continue
            pts.append((tx(x), ty(y)))
    if not pts:
        pts = [(0.0, 0.0), (1.0, 1.0)]
    xs0 = [p[0] for p in pts]
    ys0 = [p[1] for p in pts]
    xlo, xhi = min(xs0), max(xs0)
    ylo, yhi = min(ys0), max(ys0)
    if xhi - xlo < 1e-12:
        xhi = xlo + 1.0
    if yhi - ylo < 1e-12:
        yhi = ylo + 1.0
    xpad = 0.04 * (xhi - xlo)
    ypad = 0.06 * (yhi - ylo)
    xlo, xhi = xlo - xpad, xhi + xpad
    ylo, yhi = ylo - ypad, yhi + ypad

    def px(v):
        return ml + (v - xlo) / (xhi - xlo) * pw

    def py(v):
        return mt + ph - (v - ylo) / (yhi - ylo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#333"/>',
    ]
    if title:
        out.append(f'<text x="{ml + pw / 2}" y="20" text-anchor="middle" '
                   f'font-size="14">{title}</text>')
    for t in _ticks(xlo, xhi):
        x = px(t)
        label = _fmt(10.0**t) if logx else _fmt(t)
        out.append(f'<line x1="{x:.1f}" y1="{mt + ph}" x2="{x:.1f}" '
                   f'y2="{mt + ph + 4}" stroke="#333"/>')
        out.append(f'<text x="{x:.1f}" y="{mt + ph + 17}" '
                   f'text-anchor="middle">{label}</text>')
    for t in _ticks(ylo, yhi):
        y = py(t)
        label = _fmt(10.0**t) if logy else _fmt(t)
        out.append(f'<line x1="{ml - 4}" y1="{y:.1f}" x2="{ml}" y2="{y:.1f}" '
                   f'stroke="#333"/>')
        out.append(f'<text x="{ml - 7}" y="{y + 4:.1f}" '
                   f'text-anchor="end">{label}</text>')
    if xlabel:
        out.append(f'<text x="{ml + pw / 2}" y="{height - 10}" '
                   f'text-anchor="middle">{xlabel}</text>')
    if ylabel:
        out.append(f'<text x="18" y="{mt + ph / 2}" text-anchor="middle" '
                   f'transform="rotate(-90 18 {mt + ph / 2})">{ylabel}</text>')

    for i, (label, xs, ys) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        coords = []
        for x, y in zip(np.asarray(xs, float), np.asarray(ys, float)):
            if not (math.isfinite(x) and math.isfinite(y)):
                continue
            if (logx and x <= 0) or (logy and y <= 0):
                continue
            coords.append((px(tx(x)), py(ty(y))))
        if len(coords) > 1:
            path = " ".join(f"{x:.1f},{y:.1f}" for x, y in coords)
            out.append(f'<polyline points="{path}" fill="none" '
                       f'stroke="{color}" stroke-width="1.6"/>')
        if markers:
            for x, y in coords:
                out.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="2.4" '
                           f'fill="{color}"/>')
        ly = mt + 16 + 18 * i
        lx = ml + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 28}" y="{ly}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out)


@dataclass
class ReportBundle:
    manifest: dict
    tables: dict = field(default_factory=dict)   # name -> (header, rows)
    figures: dict = field(default_factory=dict)  # name -> svg text

    def add_table(self, name, header, rows):
        self.tables[name] = (list(header), [list(r) for r in rows])

    def add_figure(self, name, svg: str):
        self.figures[name] = svg

    def write(self, outdir) -> list:
        os.makedirs(outdir, exist_ok=True)
        written = []
        preamble = (
            f"config_hash={self.manifest.get('config_hash', '')}",
            f"seeds={','.join(str(s) for s in self.manifest.get('seeds', []))}",
        )
        for name, (header, rows) in sorted(self.tables.items()):
            path = os.path.join(outdir, f"{name}.csv")
            atomic_write(path, render_csv(header, rows, preamble))
            written.append(path)
        for name, svg in sorted(self.figures.items()):
            path = os.path.join(outdir, f"{name}.svg")
            atomic_write(path, svg)
            written.append(path)
        path = os.path.join(outdir, "manifest.json")
        atomic_write(path, json.dumps(self.manifest, indent=1, sort_keys=True))
        written.append(path)
        return written
