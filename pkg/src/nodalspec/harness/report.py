"""Deterministic CSV, JSON and SVG writers."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from ..nodal import NodalSet


def fmt(x) -> str:
    """Text form of one cell: floats with 17 significant digits, booleans lower-case."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _write(path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as e:
        raise OSError(f"{path}: {e.strerror or e}") from e
    return path


def emit_csv(rows, path, columns) -> Path:
    """RFC 4180 CSV with LF line endings; an empty ``rows`` gives the header only."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c)) for c in columns])
    return _write(path, buf.getvalue())


def emit_json(obj, path) -> Path:
    return _write(path, json.dumps(obj, sort_keys=True, indent=2, default=_plain) + "\n")


def _plain(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")


def nodal_polylines(nodal: NodalSet) -> list[np.ndarray]:
    """Chain 2D segments into polylines by exact endpoint equality.

    Segments are stored in their cell's frame, so chains stop at the edges
    of the unit square instead of jumping across the wrap.
    """
    segs = nodal.segments
    ends: dict[tuple, list[int]] = {}
    for i, s in enumerate(segs):
        ends.setdefault((s[0], s[1]), []).append(i)
        ends.setdefault((s[2], s[3]), []).append(i)
    used = np.zeros(len(segs), dtype=bool)

    def walk(point, chain):
        while True:
            nxt = next((j for j in ends.get(point, ()) if not used[j]), None)
            if nxt is None:
                return
            used[nxt] = True
            s = segs[nxt]
            point = (s[2], s[3]) if (s[0], s[1]) == point else (s[0], s[1])
            chain.append(point)

    lines = []
    for i, s in enumerate(segs):
        if used[i]:
            continue
        used[i] = True
        fwd = [(s[2], s[3])]
        walk(fwd[0], fwd)
        back = []
        walk((s[0], s[1]), back)
        pts = back[::-1] + [(s[0], s[1])] + fwd
        lines.append(np.array(pts))
    return lines


def _num(v: float) -> str:
    return format(float(v), ".17g")


def nodal_svg(nodal: NodalSet, stroke: float = 0.002) -> str:
    out = [
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 1 1" width="512" height="512">',
        '<rect x="0" y="0" width="1" height="1" fill="white"/>',
    ]
    if nodal.dim == 1:
        for r in nodal.roots:
            out.append(f'<polyline points="{_num(r)},0 {_num(r)},1" fill="none" stroke="black" stroke-width="{stroke}"/>')
    else:
        for line in nodal_polylines(nodal):
            pts = " ".join(f"{_num(x)},{_num(1 - y)}" for x, y in line)
            out.append(f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="{stroke}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _decades(lo: float, hi: float) -> list[float]:
    return [10.0**k for k in range(math.floor(lo), math.ceil(hi) + 1)]


def scatter_svg(series: dict, xlabel: str, ylabel: str, title: str = "") -> str:
    """Log-log scatter of ``{label: (xs, ys)}``; non-positive points are dropped."""
    data = {}
    for label, (xs, ys) in series.items():
        xs, ys = np.asarray(xs, float), np.asarray(ys, float)
        keep = (xs > 0) & (ys > 0) & np.isfinite(xs) & np.isfinite(ys)
        data[label] = (np.log10(xs[keep]), np.log10(ys[keep]))
    allx = np.concatenate([v[0] for v in data.values()] or [np.zeros(0)])
    ally = np.concatenate([v[1] for v in data.values()] or [np.zeros(0)])
    if allx.size == 0:
        allx = ally = np.array([0.0, 1.0])
    x0, x1 = math.floor(allx.min()), math.ceil(allx.max())
    y0, y1 = math.floor(ally.min()), math.ceil(ally.max())
    x1, y1 = max(x1, x0 + 1), max(y1, y0 + 1)
    L, R, T, B = 0.15, 0.95, 0.1, 0.85

    def px(v):
        return L + (v - x0) / (x1 - x0) * (R - L)

    def py(v):
        return B - (v - y0) / (y1 - y0) * (B - T)

    font = 'font-family="sans-serif" font-size="0.03"'
    out = [
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 1 1" width="600" height="600">',
        '<rect x="0" y="0" width="1" height="1" fill="white"/>',
        f'<polyline points="{L},{T} {L},{B} {R},{B}" fill="none" stroke="black" stroke-width="0.003"/>',
    ]
    for k in range(x0, x1 + 1):
        out.append(f'<text x="{_num(px(k))}" y="{B + 0.05}" text-anchor="middle" {font}>1e{k}</text>')
    for k in range(y0, y1 + 1):
        out.append(f'<text x="{L - 0.01}" y="{_num(py(k))}" text-anchor="end" {font}>1e{k}</text>')
    out.append(f'<text x="{(L + R) / 2}" y="0.97" text-anchor="middle" {font}>{xlabel}</text>')
    out.append(
        f'<text x="0.03" y="{(T + B) / 2}" text-anchor="middle" transform="rotate(-90 0.03 {(T + B) / 2})" {font}>{ylabel}</text>'
    )
    if title:
        out.append(f'<text x="{(L + R) / 2}" y="0.06" text-anchor="middle" {font}>{title}</text>')
    colors = ("black", "crimson", "steelblue", "darkgreen", "darkorange")
    for i, (label, (lx, ly)) in enumerate(data.items()):
        col = colors[i % len(colors)]
        for a, b in zip(lx, ly):
            out.append(f'<circle cx="{_num(px(a))}" cy="{_num(py(b))}" r="0.006" fill="{col}"/>')
        out.append(f'<text x="{R - 0.2}" y="{T + 0.04 * (i + 1)}" fill="{col}" {font}>{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(obj, path, **kwargs) -> Path:
    """Nodal set drawing for a :class:`NodalSet`, otherwise a log-log scatter
    (``obj`` is then the ``series`` mapping of :func:`scatter_svg`)."""
    if isinstance(obj, NodalSet):
        return _write(path, nodal_svg(obj, **kwargs))
    return _write(path, scatter_svg(obj, **kwargs))
