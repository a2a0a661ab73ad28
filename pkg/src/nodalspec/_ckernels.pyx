# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled grid kernels; mirrors ``_pykernels`` expression for expression."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, nearbyint

cnp.import_array()

# first-segment edge pair per case code (-1 when the cell is not crossed)
cdef int _EA[16]
cdef int _EB[16]

cdef void _init_tables():
    cdef int corners[4][2]
    corners[0][0] = 0; corners[0][1] = 1
    corners[1][0] = 1; corners[1][1] = 2
    corners[2][0] = 3; corners[2][1] = 2
    corners[3][0] = 0; corners[3][1] = 3
    cdef int code, e, n, a, b
    cdef int found[2]
    for code in range(16):
        n = 0
        for e in range(4):
            a = (code >> corners[e][0]) & 1
            b = (code >> corners[e][1]) & 1
            if a != b:
                if n < 2:
                    found[n] = e
                n += 1
        if n == 2:
            _EA[code] = found[0]
            _EB[code] = found[1]
        else:
            _EA[code] = -1
            _EB[code] = -1

_init_tables()


cdef inline void _edge_point(int e, Py_ssize_t i, Py_ssize_t j, const double[:, ::1] f,
                             Py_ssize_t N, double *x, double *y) nogil:
    cdef Py_ssize_t i1 = (i + 1) % N
    cdef Py_ssize_t j1 = (j + 1) % N
    cdef double fi = <double>i
    cdef double fj = <double>j
    cdef double dn = <double>N
    cdef double v
    if e == 0:
        v = f[i, j] / (f[i, j] - f[i1, j])
        x[0] = (fi + v) / dn
        y[0] = fj / dn
    elif e == 1:
        v = f[i1, j] / (f[i1, j] - f[i1, j1])
        x[0] = (fi + 1.0) / dn
        y[0] = (fj + v) / dn
    elif e == 2:
        v = f[i, j1] / (f[i, j1] - f[i1, j1])
        x[0] = (fi + v) / dn
        y[0] = (fj + 1.0) / dn
    else:
        v = f[i, j] / (f[i, j] - f[i, j1])
        x[0] = fi / dn
        y[0] = (fj + v) / dn


def marching_squares(values, center):
    cdef const double[:, ::1] f = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[:, ::1] c = np.ascontiguousarray(center, dtype=np.float64)
    cdef Py_ssize_t N = f.shape[0]
    out_arr = np.empty((2 * N * N, 4), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, i1, j1, k = 0
    cdef int code, ea, eb, ea2, eb2
    cdef bint p00, joined
    with nogil:
        for i in range(N):
            i1 = (i + 1) % N
            for j in range(N):
                j1 = (j + 1) % N
                p00 = f[i, j] >= 0
                code = (<int>p00) | ((<int>(f[i1, j] >= 0)) << 1) \
                    | ((<int>(f[i1, j1] >= 0)) << 2) | ((<int>(f[i, j1] >= 0)) << 3)
                ea2 = -1
                if code == 5 or code == 10:
                    joined = (c[i, j] >= 0) == p00
                    ea = 0
                    if joined:
                        eb = 1; ea2 = 2; eb2 = 3
                    else:
                        eb = 3; ea2 = 1; eb2 = 2
                else:
                    ea = _EA[code]
                    eb = _EB[code]
                if ea >= 0:
                    _edge_point(ea, i, j, f, N, &out[k, 0], &out[k, 1])
                    _edge_point(eb, i, j, f, N, &out[k, 2], &out[k, 3])
                    k += 1
                if ea2 >= 0:
                    _edge_point(ea2, i, j, f, N, &out[k, 0], &out[k, 1])
                    _edge_point(eb2, i, j, f, N, &out[k, 2], &out[k, 3])
                    k += 1
    return out_arr[:k].copy()


def segment_distances(points, segments, candidates):
    cdef const double[:, ::1] P = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] S = np.ascontiguousarray(segments, dtype=np.float64)
    cdef const long long[:, ::1] C = np.ascontiguousarray(candidates, dtype=np.int64)
    cdef Py_ssize_t n = P.shape[0], kc = C.shape[1]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t p, q, s
    cdef double px, py, ax, ay, bx, by, sx, sy, abx, aby, denom, u, qx, qy, d2, best
    with nogil:
        for p in range(n):
            px = P[p, 0]
            py = P[p, 1]
            best = 1e300
            for q in range(kc):
                s = C[p, q]
                ax = S[s, 0]
                ay = S[s, 1]
                bx = S[s, 2]
                by = S[s, 3]
                sx = nearbyint(0.5 * (ax + bx) - px)
                sy = nearbyint(0.5 * (ay + by) - py)
                ax = ax - sx - px
                ay = ay - sy - py
                bx = bx - sx - px
                by = by - sy - py
                abx = bx - ax
                aby = by - ay
                denom = abx * abx + aby * aby
                if denom > 0:
                    u = -(ax * abx + ay * aby) / denom
                else:
                    u = 0.0
                if u < 0.0:
                    u = 0.0
                elif u > 1.0:
                    u = 1.0
                qx = ax + u * abx
                qy = ay + u * aby
                d2 = qx * qx + qy * qy
                if d2 < best:
                    best = d2
            out[p] = sqrt(best)
    return out_arr
