"""Pure NumPy implementations of the grid kernels.

Same algorithms, same output ordering and the same floating-point
expressions as the compiled ``_ckernels`` module, so both backends produce
identical segments.
"""

import numpy as np

# Cell corners in counter-clockwise order: 00, 10, 11, 01 (bit 0..3 of the case code).
# Edges: 0 bottom (00-10), 1 right (10-11), 2 top (01-11), 3 left (00-01).
_EDGE_CORNERS = ((0, 1), (1, 2), (3, 2), (0, 3))


def _build_tables():
    first = np.full((16, 2), -1, dtype=np.int64)
    for code in range(16):
        bits = [(code >> b) & 1 for b in range(4)]
        crossed = [e for e, (a, b) in enumerate(_EDGE_CORNERS) if bits[a] != bits[b]]
        if len(crossed) == 2:
            first[code] = crossed
    return first


SEGMENT_TABLE = _build_tables()
SADDLE_CODES = (5, 10)


def marching_squares(values, center):
    """Zero-level segments of a periodic 2D grid function.

    Returns an ``(K, 4)`` array of ``x1, y1, x2, y2`` rows in the frame of
    the emitting cell (coordinates may equal 1.0 on the wrap row/column).
    Saddle cells are split according to the sign of ``center``.
    """
    f = np.ascontiguousarray(values, dtype=np.float64)
    c = np.ascontiguousarray(center, dtype=np.float64)
    N = f.shape[0]
    f10 = np.roll(f, -1, axis=0)
    f01 = np.roll(f, -1, axis=1)
    f11 = np.roll(f10, -1, axis=1)
    p00, p10, p11, p01 = (f >= 0), (f10 >= 0), (f11 >= 0), (f01 >= 0)
    code = p00 * 1 + p10 * 2 + p11 * 4 + p01 * 8

    with np.errstate(divide="ignore", invalid="ignore"):
        H = f / (f - f10)
        V = f / (f - f01)
    I, J = np.meshgrid(np.arange(N, dtype=np.float64), np.arange(N, dtype=np.float64), indexing="ij")
    E = np.empty((4, N, N, 2))
    E[0, ..., 0] = (I + H) / N
    E[0, ..., 1] = J / N
    E[1, ..., 0] = (I + 1.0) / N
    E[1, ..., 1] = (J + np.roll(V, -1, axis=0)) / N
    E[2, ..., 0] = (I + np.roll(H, -1, axis=1)) / N
    E[2, ..., 1] = (J + 1.0) / N
    E[3, ..., 0] = I / N
    E[3, ..., 1] = (J + V) / N

    ea = SEGMENT_TABLE[code, 0].copy()
    eb = SEGMENT_TABLE[code, 1].copy()
    saddle = (code == 5) | (code == 10)
    joined = (c >= 0) == p00
    ea2 = np.full((N, N), -1, dtype=np.int64)
    eb2 = np.full((N, N), -1, dtype=np.int64)
    ea[saddle] = 0
    eb[saddle] = np.where(joined[saddle], 1, 3)
    ea2[saddle] = np.where(joined[saddle], 2, 1)
    eb2[saddle] = np.where(joined[saddle], 3, 2)

    segs = np.empty((N, N, 2, 4))
    for slot, (a, b) in enumerate(((ea, eb), (ea2, eb2))):
        ok = a >= 0
        a0 = np.where(ok, a, 0)
        b0 = np.where(ok, b, 0)
        pa = np.take_along_axis(E, a0[None, ..., None], axis=0)[0]
        pb = np.take_along_axis(E, b0[None, ..., None], axis=0)[0]
        segs[:, :, slot, :2] = pa
        segs[:, :, slot, 2:] = pb
    mask = np.stack([ea >= 0, ea2 >= 0], axis=-1)
    return segs[mask]


def segment_distances(points, segments, candidates):
    """Minimum torus distance from each point to its candidate segments.

    ``candidates[p]`` lists segment indices for point ``p``; each segment is
    shifted by the integer vector that brings its midpoint closest to the
    point before the Euclidean point-segment distance is taken.
    """
    points = np.asarray(points, dtype=np.float64)
    segs = np.asarray(segments, dtype=np.float64)
    cand = np.asarray(candidates, dtype=np.int64)
    out = np.empty(points.shape[0])
    chunk = 65536
    for lo in range(0, points.shape[0], chunk):
        p = points[lo : lo + chunk, None, :]
        s = segs[cand[lo : lo + chunk]]
        a = s[..., :2]
        b = s[..., 2:]
        shift = np.round(0.5 * (a + b) - p)
        a = a - shift - p
        b = b - shift - p
        ab = b - a
        denom = np.sum(ab * ab, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(denom > 0, -np.sum(a * ab, axis=-1) / denom, 0.0)
        u = np.clip(u, 0.0, 1.0)
        q = a + u[..., None] * ab
        out[lo : lo + chunk] = np.sqrt(np.min(np.sum(q * q, axis=-1), axis=-1))
    return out
