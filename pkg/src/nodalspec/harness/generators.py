"""Seeded field generators for the sweeps."""

from __future__ import annotations

import math

import numpy as np

from ..grid import Field, TorusGrid
from ..spectral import heat_evolve, heat_kernel_valid, norm_linf
from .rng import stream


class ConfigError(ValueError):
    """Invalid experiment parameters."""


def _canonical_modes(grid: TorusGrid, n_cut: float, n_max: float) -> np.ndarray:
    """Flat FFT indices of one representative per +-m pair with n_cut < |m| <= n_max."""
    ks = [k.ravel() for k in grid.wavenumbers()]
    level = sum(k * k for k in ks)
    band = (level > n_cut**2) & (level <= n_max**2)
    # representative: first nonzero component positive
    first = np.zeros_like(ks[0])
    for k in reversed(ks):
        first = np.where(k != 0, k, first)
    return np.flatnonzero(band & (first > 0))


def gen_highpass(
    seed: int, n_cut: int, n_max: int, grid: TorusGrid, experiment: str = "highpass", index: int = 0
) -> Field:
    """Random trigonometric polynomial on frequencies ``n_cut < |m| <= n_max``.

    Cosine and sine coefficients are independent standard normals drawn from
    the ``(experiment, seed, index)`` stream in FFT order of the modes; the
    field is mean-free and scaled to unit sup norm.
    """
    if not (0 <= n_cut < n_max <= grid.N // 4):
        raise ConfigError(f"need 0 <= n_cut < n_max <= N/4, got {n_cut}, {n_max}, N={grid.N}")
    modes = _canonical_modes(grid, n_cut, n_max)
    rng = stream(experiment, seed, index)
    a = rng.standard_normal(len(modes))
    b = rng.standard_normal(len(modes))
    coef = np.zeros(grid.size, dtype=np.complex128)
    coef[modes] = (a - 1j * b) / math.sqrt(2)
    coef = coef.reshape(grid.shape)
    axes = tuple(range(grid.dim))
    coef = coef + np.conj(np.roll(np.flip(coef, axis=axes), 1, axis=axes))
    values = np.fft.ifftn(coef * grid.size).real
    return Field(grid, values / np.max(np.abs(values)))


def gen_sine_series(seed: int, k_min: int, k_max: int, grid: TorusGrid, index: int = 0) -> tuple[Field, int]:
    """1D sum of ``a_k sin(2 pi k x)`` over ``k_min <= k <= k_max``; returns the field and the
    smallest frequency whose coefficient is nonzero."""
    if grid.dim != 1 or not 1 <= k_min <= k_max < grid.N // 2:
        raise ConfigError("sine series needs a 1D grid and 1 <= k_min <= k_max < N/2")
    a = stream("sine", seed, index).standard_normal(k_max - k_min + 1)
    k = np.arange(k_min, k_max + 1)
    x = grid.axis()
    values = np.sin(2 * np.pi * np.multiply.outer(x, k)) @ a
    return Field(grid, values), int(k[np.flatnonzero(a)[0]])


def dirac_time(n_points: int, r: float, dim: int) -> float:
    return r * r * n_points ** (-2.0 / dim)


def _lattice_side(n_points: int, dim: int) -> int:
    side = round(n_points ** (1.0 / dim))
    return side if side**dim >= n_points else math.ceil(n_points ** (1.0 / dim))


def dirac_points(n_points: int, seed: int, dim: int, jitter: float = 0.2, index: int = 0) -> np.ndarray:
    """Jittered lattice: ``ceil(n^(1/d))`` sites per axis at cell centres, each moved by
    at most ``jitter`` lattice spacings per axis; ``n`` sites drawn if the lattice is larger."""
    side = _lattice_side(n_points, dim)
    rng = stream("dirac", seed, index)
    sites = np.stack(np.meshgrid(*([np.arange(side)] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    if len(sites) > n_points:
        sites = sites[np.sort(rng.permutation(len(sites))[:n_points])]
    shift = rng.uniform(-jitter, jitter, size=sites.shape)
    return np.mod((sites + 0.5 + shift) / side, 1.0)


def gen_dirac_field(
    n_points: int, r: float, seed: int, grid: TorusGrid, jitter: float = 0.2, index: int = 0
) -> Field:
    """``-n + exp(t Laplacian) sum_k delta_{x_k}`` with ``t = r^2 n^(-2/d)``.

    Each point mass is a grid indicator of height ``N^d`` at the nearest grid
    point, so the field has mean zero up to rounding.
    """
    if n_points < 1 or r <= 0:
        raise ConfigError("need n_points >= 1 and r > 0")
    t = dirac_time(n_points, r, grid.dim)
    # spectral validity and a kernel width sqrt(2t) of at least two cells
    need = max(3.0 / (math.pi * math.sqrt(t)), 2.0 / math.sqrt(2 * t))
    if not heat_kernel_valid(grid, t) or grid.N < need:
        raise ConfigError(
            f"t={t:.3g} is not resolved on N={grid.N}; use N >= {1 << math.ceil(math.log2(need))}"
        )
    pts = dirac_points(n_points, seed, grid.dim, jitter, index)
    idx = np.mod(np.rint(pts * grid.N).astype(np.int64), grid.N)
    mass = np.zeros(grid.shape)
    np.add.at(mass, tuple(idx.T), float(grid.size))
    return heat_evolve(Field(grid, mass), t) - float(n_points)


def cosine_field(grid: TorusGrid, k: int, axis: int = 0, amplitude: float = 1.0) -> Field:
    x = grid.coords()[axis]
    return Field(grid, amplitude * np.cos(2 * np.pi * k * x))


def normalized(f: Field) -> Field:
    return f * (1.0 / norm_linf(f))
