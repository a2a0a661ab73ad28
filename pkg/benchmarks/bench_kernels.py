"""Time the compiled and NumPy grid kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--N 512] [--repeat 5]
"""

import argparse
import time

import numpy as np

from nodalspec import kernels
from nodalspec.grid import TorusGrid
from nodalspec.harness.generators import gen_highpass
from nodalspec.nodal import cell_center_values, nodal_segments
from scipy.spatial import cKDTree


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--N", type=int, default=512)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    grid = TorusGrid(2, args.N)
    f = gen_highpass(0, 4, 16, grid, "bench")
    center = cell_center_values(f)
    segs = nodal_segments(f).segments
    mids = np.mod(0.5 * (segs[:, :2] + segs[:, 2:]), 1.0)
    mids[mids >= 1.0] = 0.0
    pts = np.stack([c.ravel() for c in grid.coords()], axis=1)
    _, cand = cKDTree(mids, boxsize=1.0).query(pts, k=16)
    cand = np.asarray(cand, dtype=np.int64)

    backends = kernels.available_backends()
    print(f"N={args.N}  segments={len(segs)}  backends={backends}")
    print(f"{'kernel':<20}{'backend':<10}{'seconds':>10}")
    results = {}
    for name in backends:
        impl = kernels.load_backend(name)
        t_ms, s = best_of(lambda: impl.marching_squares(f.values, center), args.repeat)
        t_sd, d = best_of(lambda: impl.segment_distances(pts, segs, cand), args.repeat)
        results[name] = (s, d)
        print(f"{'marching_squares':<20}{name:<10}{t_ms:>10.4f}")
        print(f"{'segment_distances':<20}{name:<10}{t_sd:>10.4f}")
    if len(results) == 2:
        (s1, d1), (s2, d2) = results.values()
        print("segments identical:", np.array_equal(s1, s2), " max distance diff:", float(np.max(np.abs(d1 - d2))))


if __name__ == "__main__":
    main()
