"""Numerical checks of the machinery used inside the nodal-measure proofs.

Covers the natural heat time, the dyadic cube partition with its A/B/C
classification, the in-cube heat retention constant ``c_n``, Gaussian upper
bounds for the heat kernel, Davies-Gaffney off-diagonal estimates and the
four-region mass bookkeeping of the regular-zero-set argument.

Heat kernels here follow the spectral convention ``exp(-4 pi^2 |m|^2 t)``,
i.e. a Gaussian of variance ``2t`` per axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import ndtr

from .grid import Field, TorusGrid
from .nodal import DistanceField, NodalSet, distance_transform, nodal_set, tube_volume
from .spectral import (
    decompose,
    heat_evolve,
    heat_kernel_row,
    heat_kernel_valid,
    norm_l1,
    norm_l2,
)

__all__ = [
    "PartitionError",
    "CubePartition",
    "RegionMasses",
    "KernelBoundFit",
    "CnEstimate",
    "DaviesGaffneyResult",
    "natural_time",
    "decay_time",
    "snap_delta",
    "classify_cubes",
    "cn_closed_form",
    "proof_cn",
    "estimate_cn",
    "wrapped_cube_mass",
    "gaussian_bound_fit",
    "torus_set_distance",
    "davies_gaffney_check",
    "davies_gaffney_function_check",
    "thm2_regions",
    "b_cube_radii",
    "separated_count",
]

LABEL_A, LABEL_B, LABEL_C = 0, 1, 2
LABEL_NAMES = ("A", "B", "C")


class PartitionError(ValueError):
    """Cube side does not tile the grid."""


def natural_time(lam: float, l1: float, K: float = 1.0) -> float:
    """``(K / lam) log(e / l1)`` for a field normalized to unit sup norm."""
    if lam <= 0:
        raise ValueError("no spectral decay at lambda = 0")
    if l1 <= 0:
        raise ValueError("l1 must be positive")
    return K / lam * math.log(math.e / l1)


def decay_time(f: Field, lam: float, factor: float) -> float:
    """Smallest ``t`` at which the L2 chain guarantees ``|e^{tD} f|_1 <= factor |f|_1``.

    Uses ``|e^{tD} f|_1 <= |P_low f|_2 + e^{-lam t} |f|_2`` with ``P_low`` the
    projection below ``lam``; raises if the low band alone already exceeds
    the target.
    """
    l1, l2 = norm_l1(f), norm_l2(f)
    levels, energy = decompose(f).level_spectrum()
    cut = lam / (4 * math.pi**2)
    low = math.sqrt(float(energy[levels < cut - 1e-9].sum()))
    room = factor * l1 - low
    if room <= 0:
        raise ValueError("low-frequency mass exceeds the decay target at every time")
    return max(0.0, math.log(l2 / room) / lam)


def snap_delta(delta: float, grid: TorusGrid) -> tuple[float, int]:
    """Nearest dyadic multiple of the spacing, as ``(delta, points_per_side)``."""
    m = 2 ** int(round(math.log2(max(delta * grid.N, 1.0))))
    m = min(max(m, 1), grid.N)
    return m / grid.N, m


@dataclass(frozen=True, eq=False)
class CubePartition:
    grid: TorusGrid
    delta: float
    side: int
    t: float
    c_n: float
    labels: np.ndarray = field(repr=False)
    mass_f: np.ndarray = field(repr=False)
    mass_heat: np.ndarray = field(repr=False)
    l1: float = 0.0
    heat_l1: float = 0.0

    @property
    def counts(self) -> dict:
        return {name: int(np.sum(self.labels == i)) for i, name in enumerate(LABEL_NAMES)}

    @property
    def n_cubes(self) -> int:
        return self.labels.size

    @property
    def c_mass(self) -> float:
        return float(self.mass_f[self.labels == LABEL_C].sum())

    @property
    def premise_holds(self) -> bool:
        """Global decay ``|e^{tD} f|_1 <= (c_n / 10^4) |f|_1``."""
        return self.heat_l1 <= self.c_n / 1e4 * self.l1

    @property
    def c_mass_holds(self) -> bool:
        return self.c_mass <= self.l1 / 100 * (1 + 1e-12)

    @property
    def beta(self) -> float:
        """``#B delta^n / |f|_1``."""
        return self.counts["B"] * self.delta**self.grid.dim / self.l1

    def rows(self):
        idx = np.indices(self.labels.shape).reshape(self.grid.dim, -1).T
        for pos, lab, mf, mh in zip(idx, self.labels.ravel(), self.mass_f.ravel(), self.mass_heat.ravel()):
            yield {
                "cube": "-".join(str(int(i)) for i in pos),
                "label": LABEL_NAMES[lab],
                "mass_f": float(mf),
                "mass_heat": float(mh),
            }


def _cube_sums(values: np.ndarray, side: int) -> np.ndarray:
    n = values.shape[0] // side
    dim = values.ndim
    shape = []
    for _ in range(dim):
        shape += [n, side]
    return values.reshape(shape).sum(axis=tuple(range(1, 2 * dim, 2)))


def classify_cubes(f: Field, t: float, delta: float, c_n: float) -> CubePartition:
    """Label the dyadic ``delta``-cubes A, B or C from their ``|f|`` and heat masses.

    C: ``int_Q |e^{tD} f| >= (c_n/100) int_Q |f|``; otherwise B when the cube
    average of ``|f|`` exceeds ``|f|_1 / 2`` and A when it does not.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    N = f.grid.N
    side = delta * N
    if abs(side - round(side)) > 1e-9 or round(side) < 1 or N % int(round(side)):
        raise PartitionError(f"delta={delta:g} is not a divisor-aligned multiple of 1/{N}")
    side = int(round(side))
    vol = f.grid.cell_volume
    g = heat_evolve(f, t)
    mass_f = _cube_sums(np.abs(f.values), side) * vol
    mass_heat = _cube_sums(np.abs(g.values), side) * vol
    l1 = norm_l1(f)
    cube_vol = (side / N) ** f.grid.dim
    labels = np.where(mass_f / cube_vol > 0.5 * l1, LABEL_B, LABEL_A)
    labels = np.where(mass_heat >= c_n / 100 * mass_f, LABEL_C, labels).astype(np.int8)
    return CubePartition(
        f.grid, side / N, side, t, c_n, labels, mass_f, mass_heat, l1, norm_l1(g)
    )


def cn_closed_form(n: int) -> float:
    """Standard-normal mass of the unit cube corner, ``(Phi(1) - 1/2)^n``."""
    return (float(ndtr(1.0)) - 0.5) ** n


def proof_cn(n: int, proof_faithful: bool = False) -> float:
    """``c_n`` used in classifications; the proof's override shrinks it to 1e-4."""
    c = cn_closed_form(n)
    if proof_faithful and c >= 1e-3:
        return 1e-4
    return c


@dataclass(frozen=True)
class CnEstimate:
    value: float
    argmin: tuple
    center_value: float
    t: float
    delta: float
    closed_form: float


def _interval_heat_1d(grid: TorusGrid, t: float, delta: float, x=None) -> np.ndarray:
    # exp(tD) applied to the indicator of [0, delta], evaluated at x (default: grid)
    N = grid.N
    m = np.arange(-(N // 2), N // 2)
    coef = np.empty(N, dtype=np.complex128)
    nz = m != 0
    coef[nz] = (1 - np.exp(-2j * np.pi * m[nz] * delta)) / (2j * np.pi * m[nz])
    coef[~nz] = delta
    coef *= np.exp(-4 * np.pi**2 * m.astype(float) ** 2 * t)
    x = grid.axis() if x is None else np.atleast_1d(np.asarray(x, dtype=float))
    return (np.exp(2j * np.pi * np.multiply.outer(x, m)) @ coef).real


def estimate_cn(grid: TorusGrid, t: float, delta: float | None = None) -> CnEstimate:
    """Minimal heat mass retained in the cube ``[0, delta]^n`` from a point inside it.

    The cube indicator is evolved through its exact Fourier series on the
    grid's band and the retained mass is minimized over the grid points of
    the closed cube. ``delta`` defaults to ``sqrt(t)``.
    """
    delta = math.sqrt(t) if delta is None else delta
    if not heat_kernel_valid(grid, t) or delta * grid.N < 2:
        raise ValueError(f"N={grid.N} does not resolve t={t:g}, delta={delta:g}")
    prof = _interval_heat_1d(grid, t, delta)
    inside = grid.axis() <= delta + 1e-12
    p1 = prof[inside]
    mass = p1
    for _ in range(grid.dim - 1):
        mass = np.multiply.outer(mass, p1)
    pos = np.unravel_index(int(np.argmin(mass)), mass.shape)
    center = float(_interval_heat_1d(grid, t, delta, delta / 2)[0]) ** grid.dim
    return CnEstimate(
        float(mass[pos]),
        tuple(int(i) / grid.N for i in pos),
        center,
        t,
        delta,
        cn_closed_form(grid.dim),
    )


def _wrapped_point_mass(x: float, t: float, delta: float, images: int = 8) -> float:
    s = math.sqrt(2 * t)
    j = np.arange(-images, images + 1)
    return float(np.sum(ndtr((x + j) / s) - ndtr((x + j - delta) / s)))


def wrapped_cube_mass(x, t: float, delta: float) -> float:
    """Image-sum value of ``int_{[0,delta]^n} p_t(x, y) dy`` (independent of the grid)."""
    out = 1.0
    for xi in np.atleast_1d(x):
        out *= _wrapped_point_mass(float(xi), t, delta)
    return out


@dataclass(frozen=True)
class KernelBoundFit:
    t: float
    dim: int
    c1_fit: float
    c2_fit: float
    c2_tail: float
    min_slack: float
    n_samples: int
    n_below_floor: int
    degenerate: bool


def _torus_offsets(grid: TorusGrid) -> np.ndarray:
    ax = grid.axis()
    ax = np.minimum(ax, 1.0 - ax)
    sq = sum(c * c for c in np.meshgrid(*([ax] * grid.dim), indexing="ij"))
    return np.sqrt(sq)


def gaussian_bound_fit(grid: TorusGrid, t: float, floor: float = 1e-10) -> KernelBoundFit:
    """Constants with ``p_t(x, y) <= c1 t^{-n/2} exp(-c2 d^2 / t)`` on every sampled pair.

    ``c1`` comes from the diagonal, ``c2`` is the smallest exponent over all
    samples whose kernel value exceeds ``floor * p_t(x, x)`` (values below that
    are at the level of the spectral sum's rounding). The value over the tail
    ``d >= 3 sqrt(t)`` alone is reported as ``c2_tail``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    p = heat_kernel_row((0,) * grid.dim, t, grid).values
    d = _torus_offsets(grid)
    scale = t ** (grid.dim / 2)
    p0 = float(p.flat[0])
    c1 = p0 * scale * (1 + 1e-12)
    valid = (p > floor * p0) & (d > 0)
    ratios = t / d[valid] ** 2 * np.log(c1 / (scale * p[valid]))
    c2 = max(0.0, float(ratios.min())) * (1 - 1e-9) if ratios.size else 0.0
    tail = d[valid] >= 3 * math.sqrt(t)
    c2_tail = float(ratios[tail].min()) if np.any(tail) else float("nan")
    sampled = valid | (d == 0)
    while True:
        slack = c1 / scale * np.exp(-c2 * d[sampled] ** 2 / t) - p[sampled]
        if slack.min() >= 0 or c2 == 0.0:
            break
        # rounding in a nearly flat kernel; back off until the bound dominates
        c2 = c2 * 0.5 if c2 > 1e-300 else 0.0
    return KernelBoundFit(
        t, grid.dim, c1, c2, c2_tail, float(slack.min()),
        int(sampled.sum()), int((~sampled).sum()), c2 < 1e-2,
    )


@dataclass(frozen=True)
class DaviesGaffneyResult:
    lhs: float
    rhs: float
    passed: bool
    distance: float
    method: str = "spectral"


def torus_set_distance(mask_a: np.ndarray, mask_b: np.ndarray, grid: TorusGrid) -> float:
    """Minimum torus distance between member grid points of two masks."""
    pa = np.argwhere(mask_a) / grid.N
    pb = np.argwhere(mask_b) / grid.N
    if len(pa) == 0 or len(pb) == 0:
        return math.inf
    tree = cKDTree(pb, boxsize=1.0)
    dist, _ = tree.query(pa, k=1)
    return float(np.min(dist))


def _wrapped_gaussian_table(grid: TorusGrid, t: float, images: int = 4) -> np.ndarray:
    """1D periodic kernel at every grid offset, summed over images so that
    tiny far-field values keep full relative precision."""
    z = grid.axis()
    j = np.arange(-images, images + 1)
    d2 = (z[:, None] + j[None, :]) ** 2
    return np.exp(-d2 / (4 * t)).sum(axis=1) / math.sqrt(4 * math.pi * t)


# spectral pairings below this fraction of their natural scale are at the FFT rounding floor
_SPECTRAL_FLOOR = 1e-8


def _pair_integral(wa: np.ndarray, wb: np.ndarray, t: float, grid: TorusGrid) -> float:
    """``int int wa(x) p_t(x, y) wb(y)`` by real-space summation.

    The kernel factorizes over axes, so ``wb`` is convolved one axis at a
    time with the circulant matrix of the 1D table; every product is formed
    explicitly, so nothing is lost to cancellation against O(1) terms.
    """
    table = _wrapped_gaussian_table(grid, t)
    N = grid.N
    if grid.dim == 1:
        ia, ib = np.flatnonzero(wa), np.flatnonzero(wb)
        k = table[(ia[:, None] - ib[None, :]) % N]
        return float(wa[ia] @ (k @ wb[ib])) * grid.cell_volume**2
    idx = np.arange(N)
    circ = table[(idx[:, None] - idx[None, :]) % N]
    out = wb
    for ax in range(grid.dim):
        out = np.moveaxis(np.tensordot(circ, out, axes=([1], [ax])), 0, ax)
    return float(np.sum(wa * out)) * grid.cell_volume**2


def _pairing(wa, wb, t, grid, scale) -> tuple[float, str]:
    value = float(np.mean(heat_evolve(Field(grid, wb), t).values * wa))
    if abs(value) > _SPECTRAL_FLOOR * scale:
        return value, "spectral"
    return _pair_integral(wa, wb, t, grid), "direct"


def davies_gaffney_check(set_a, set_b, t: float, grid: TorusGrid) -> DaviesGaffneyResult:
    """Compare ``int_A int_B p_t`` with ``sqrt(|A||B|) exp(-d(A,B)^2 / 4t)``.

    The double integral comes from the heat-evolved indicator of B; when
    that value is at the FFT rounding floor it is recomputed by summing the
    periodic Gaussian kernel over all pairs of grid points.
    """
    a = np.asarray(set_a, dtype=bool).reshape(grid.shape)
    b = np.asarray(set_b, dtype=bool).reshape(grid.shape)
    if np.any(a & b):
        raise ValueError("Davies-Gaffney masks must be disjoint")
    if t <= 0:
        raise ValueError("t must be positive")
    d = torus_set_distance(a, b, grid)
    scale = math.sqrt(a.mean() * b.mean())
    lhs, method = _pairing(a.astype(float), b.astype(float), t, grid, scale)
    rhs = scale * math.exp(-(d**2) / (4 * t))
    return DaviesGaffneyResult(lhs, rhs, lhs <= rhs * (1 + 1e-6), d, method)


def davies_gaffney_function_check(f1: Field, f2: Field, t: float) -> DaviesGaffneyResult:
    """``|<e^{tD} f1, f2>| <= exp(-d(supp f1, supp f2)^2 / 4t) |f1|_2 |f2|_2``."""
    d = torus_set_distance(f1.values != 0, f2.values != 0, f1.grid)
    scale = norm_l2(f1) * norm_l2(f2)
    value, method = _pairing(f2.values, f1.values, t, f1.grid, scale)
    rhs = math.exp(-(d**2) / (4 * t)) * scale
    return DaviesGaffneyResult(abs(value), rhs, abs(value) <= rhs * (1 + 1e-6), d, method)


@dataclass(frozen=True)
class RegionMasses:
    """``|f|``-masses of the regions split by sign and distance ``delta`` to the zero set.

    A: far and negative, B: near and negative, C: near and positive,
    D: far and positive. Exact zeros count as positive.
    """

    delta: float
    t: float
    masses: dict
    volumes: dict
    heat_cd: float
    heat_ab: float
    tube_volume: float
    nodal_measure: float
    mean_free: bool

    def total(self) -> float:
        return sum(self.masses.values())

    def rows(self):
        for name in "ABCD":
            yield {"region": name, "mass": self.masses[name], "volume": self.volumes[name]}


def thm2_regions(
    f: Field,
    delta: float,
    t: float,
    nodal: NodalSet | None = None,
    df: DistanceField | None = None,
) -> RegionMasses:
    nodal = nodal_set(f) if nodal is None else nodal
    df = distance_transform(nodal, f.grid) if df is None else df
    if df.empty:
        raise ValueError("region accounting needs a non-empty zero set")
    near = df.values <= delta
    neg = f.values < 0
    regions = {"A": ~near & neg, "B": near & neg, "C": near & ~neg, "D": ~near & ~neg}
    absf = np.abs(f.values)
    masses = {k: float(np.mean(absf * m)) for k, m in regions.items()}
    volumes = {k: float(m.mean()) for k, m in regions.items()}
    g = heat_evolve(f, t).values
    return RegionMasses(
        delta,
        t,
        masses,
        volumes,
        float(np.mean(g * (regions["C"] | regions["D"]))),
        float(np.mean(g * (regions["A"] | regions["B"]))),
        tube_volume(df, delta),
        nodal.measure,
        abs(f.mean()) <= norm_l1(f) / 1e4,
    )


def _box_distance(grid: TorusGrid, corner, side: float) -> np.ndarray:
    sq = 0.0
    for c, x in zip(corner, grid.coords()):
        off = np.mod(x - (c + side / 2) + 0.5, 1.0) - 0.5
        sq = sq + np.maximum(0.0, np.abs(off) - side / 2) ** 2
    return np.sqrt(sq)


def b_cube_radii(f: Field, part: CubePartition) -> np.ndarray:
    """Smallest radius around each B-cube holding enough opposite-sign mass.

    For a B-cube whose dominant sign is positive, the radius is the smallest
    ``r`` with ``int_{d(x,Q) <= r} |min(0, f)| >= (c_n / 10^4) |f|_1 delta^n``
    (and symmetrically for negative cubes); ``nan`` if never reached.
    """
    n = f.grid.dim
    target = part.c_n / 1e4 * part.l1 * part.delta**n
    vol = f.grid.cell_volume
    out = []
    for pos in np.argwhere(part.labels == LABEL_B):
        corner = pos * part.delta
        sl = tuple(slice(p * part.side, (p + 1) * part.side) for p in pos)
        inside = f.values[sl]
        positive = np.sum(np.maximum(inside, 0)) >= np.sum(np.maximum(-inside, 0))
        opp = np.maximum(-f.values, 0) if positive else np.maximum(f.values, 0)
        d = _box_distance(f.grid, corner, part.delta).ravel()
        order = np.argsort(d, kind="stable")
        cum = np.cumsum(opp.ravel()[order]) * vol
        hit = np.flatnonzero(cum >= target)
        out.append(float(d[order[hit[0]]]) if hit.size else float("nan"))
    return np.array(out)


def separated_count(part: CubePartition, r: float) -> int:
    """Greedy number of B-cubes with pairwise cube-to-cube distance at least ``r``."""
    chosen = []
    for pos in np.argwhere(part.labels == LABEL_B):
        c = pos * part.delta
        ok = True
        for q in chosen:
            off = np.abs(np.mod(c - q + 0.5, 1.0) - 0.5)
            if math.sqrt(np.sum(np.maximum(off - part.delta, 0.0) ** 2)) < r:
                ok = False
                break
        if ok:
            chosen.append(c)
    return len(chosen)
