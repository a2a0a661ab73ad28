"""Exact discrete spectral calculus on the unit torus.

The Laplacian eigenbasis on ``[0, 1)^d`` is ``1, sqrt(2) cos(2 pi m.x),
sqrt(2) sin(2 pi m.x)`` with eigenvalues ``4 pi^2 |m|^2``. A :class:`Spectrum`
stores the complex exponential coefficients ``c_m = mean(f exp(-2 pi i m.x))``
from which the real-basis coefficients follow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .grid import Field, TorusGrid

__all__ = [
    "Spectrum",
    "FrequencyScaleResult",
    "MalformedSpectrumError",
    "UndefinedScaleError",
    "HeatKernelResolutionWarning",
    "decompose",
    "reconstruct",
    "norm_l1",
    "norm_l2",
    "norm_linf",
    "heat_evolve",
    "heat_multiplier",
    "frequency_scale",
    "heat_kernel",
    "heat_kernel_row",
    "heat_kernel_valid",
    "project_band",
    "eigenfunction",
]

# 4 pi^2 (N/2)^2 t below this and the truncated kernel sum is unreliable
KERNEL_VALIDITY = 9.0


class MalformedSpectrumError(ValueError):
    """Coefficients do not describe a real field."""


class UndefinedScaleError(ValueError):
    """The frequency scale of the zero function is undefined."""


class HeatKernelResolutionWarning(UserWarning):
    """Requested time is too short for the grid's band limit."""


@dataclass(frozen=True, eq=False)
class Spectrum:
    grid: TorusGrid
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=np.complex128).reshape(self.grid.shape)
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def from_basis(cls, grid: TorusGrid, cos=None, sin=None) -> "Spectrum":
        """Build a spectrum from coefficients in the L2-normalized real basis.

        ``cos`` and ``sin`` map wave vectors (tuples of ints) to the
        coefficient of ``sqrt(2) cos(2 pi m.x)`` resp. ``sqrt(2) sin``. The
        zero vector (and grid-Nyquist vectors) carry the unit-norm basis
        function ``cos(2 pi m.x)`` instead.
        """
        c = np.zeros(grid.shape, dtype=np.complex128)
        for m, a in (cos or {}).items():
            idx, neg = _mode_index(grid, m)
            if idx == neg:
                c[idx] += a
            else:
                c[idx] += a / math.sqrt(2)
                c[neg] += a / math.sqrt(2)
        for m, b in (sin or {}).items():
            idx, neg = _mode_index(grid, m)
            if idx == neg:
                raise MalformedSpectrumError(f"sine mode {m} vanishes on the grid")
            c[idx] += -1j * b / math.sqrt(2)
            c[neg] += 1j * b / math.sqrt(2)
        return cls(grid, c)

    def coefficient(self, m) -> complex:
        idx, _ = _mode_index(self.grid, m)
        return complex(self.coefficients[idx])

    def basis_coefficients(self, m) -> tuple[float, float]:
        """``(cos, sin)`` coefficients of mode ``m`` in the normalized real basis."""
        idx, neg = _mode_index(self.grid, m)
        c = self.coefficients[idx]
        if idx == neg:
            return float(c.real), 0.0
        return math.sqrt(2) * float(c.real), -math.sqrt(2) * float(c.imag)

    def energy(self) -> float:
        """Sum of squared coefficient magnitudes (equals the squared L2 norm)."""
        return float(np.sum(np.abs(self.coefficients) ** 2))

    def level_energies(self) -> np.ndarray:
        """Squared coefficient mass per spectral level ``|m|^2 = 0, 1, 2, ...``."""
        levels = self.grid.mode_levels().ravel()
        return np.bincount(levels, weights=np.abs(self.coefficients.ravel()) ** 2)

    def level_spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Occupied levels ``|m|^2`` in increasing order with their squared mass."""
        levels, inverse = np.unique(self.grid.mode_levels().ravel(), return_inverse=True)
        return levels, np.bincount(inverse, weights=np.abs(self.coefficients.ravel()) ** 2)

    def hermitian_defect(self) -> float:
        c = self.coefficients
        axes = tuple(range(c.ndim))
        reflected = np.roll(np.flip(c, axis=axes), 1, axis=axes)
        return float(np.max(np.abs(c - np.conj(reflected))))


def _mode_index(grid: TorusGrid, m):
    m = tuple(int(x) for x in np.atleast_1d(m))
    if len(m) != grid.dim:
        raise ValueError(f"wave vector {m} has wrong length for dim={grid.dim}")
    half = grid.N // 2
    for x in m:
        if not -half <= x < half:
            raise ValueError(f"wave vector {m} not representable on N={grid.N}")
    idx = tuple(x % grid.N for x in m)
    neg = tuple(-x % grid.N for x in m)
    return idx, neg


def decompose(f: Field) -> Spectrum:
    return Spectrum(f.grid, np.fft.fftn(f.values) / f.grid.size)


def reconstruct(s: Spectrum) -> Field:
    scale = max(1.0, float(np.max(np.abs(s.coefficients))))
    defect = s.hermitian_defect()
    if defect > 1e-9 * scale:
        raise MalformedSpectrumError(f"Hermitian symmetry violated by {defect:.3g}")
    return Field(s.grid, np.fft.ifftn(s.coefficients * s.grid.size).real)


def eigenfunction(grid: TorusGrid, m, kind: str = "cos") -> Field:
    """The normalized basis function ``sqrt(2) cos(2 pi m.x)`` (or ``sin``)."""
    m = np.asarray(m, dtype=float).reshape(grid.dim)
    phase = 2 * np.pi * sum(mi * x for mi, x in zip(m, grid.coords()))
    if not np.any(m):
        return Field(grid, np.ones(grid.shape))
    trig = np.cos if kind == "cos" else np.sin
    return Field(grid, math.sqrt(2) * trig(phase))


def norm_l1(f: Field) -> float:
    return float(np.mean(np.abs(f.values)))


def norm_l2(f: Field) -> float:
    return float(np.sqrt(np.mean(f.values**2)))


def norm_linf(f: Field) -> float:
    return float(np.max(np.abs(f.values)))


def heat_multiplier(grid: TorusGrid, t: float) -> np.ndarray:
    return np.exp(-grid.eigenvalues() * t)


def heat_evolve(f: Field, t: float) -> Field:
    """Apply the heat semigroup ``exp(t Laplacian)`` spectrally."""
    if t < 0:
        raise ValueError(f"heat time must be >= 0, got {t}")
    if t == 0:
        return f
    F = np.fft.fftn(f.values) * heat_multiplier(f.grid, t)
    return Field(f.grid, np.fft.ifftn(F).real)


@dataclass(frozen=True)
class FrequencyScaleResult:
    lam: float
    first_failing_eigenvalue: float | None
    low_energy_at_failure: float
    c_used: float
    rhs_norm: str = "l1"

    @property
    def level(self) -> int:
        return int(round(self.lam / (4 * np.pi**2)))


def frequency_scale(f: Field, c: float = 1e-2, rhs_norm: str = "l1") -> FrequencyScaleResult:
    """Largest spectral threshold below which ``f`` is almost orthogonal.

    Distinct eigenvalue levels are scanned in increasing order; the first
    level at which the root of the cumulative squared coefficient mass
    exceeds ``c * ||f||`` is returned (the supremum of the admissible
    half-open range). ``rhs_norm="l2"`` swaps the L1 right-hand side for
    the L2 norm.
    """
    if not 0 < c < 1:
        raise ValueError(f"c must lie in (0, 1), got {c}")
    if f.is_zero():
        raise UndefinedScaleError("frequency scale of the zero field is undefined")
    if rhs_norm == "l1":
        rhs = c * norm_l1(f)
    elif rhs_norm == "l2":
        rhs = c * norm_l2(f)
    else:
        raise ValueError(f"rhs_norm must be 'l1' or 'l2', got {rhs_norm!r}")

    levels, energy = decompose(f).level_spectrum()
    cumulative = np.sqrt(np.cumsum(energy))
    failing = np.flatnonzero(cumulative > rhs)
    if failing.size == 0:
        return FrequencyScaleResult(
            f.grid.max_eigenvalue(), None, float(cumulative[-1]), c, rhs_norm
        )
    i = int(failing[0])
    lam = 4 * np.pi**2 * float(levels[i])
    return FrequencyScaleResult(lam, lam, float(cumulative[i]), c, rhs_norm)


def project_band(f: Field, lambda_min: float, lambda_max: float) -> Field:
    """Spectral projector onto eigenvalues in ``[lambda_min, lambda_max]``."""
    if not 0 <= lambda_min <= lambda_max:
        raise ValueError("need 0 <= lambda_min <= lambda_max")
    lam = f.grid.eigenvalues()
    mask = (lam >= lambda_min) & (lam <= lambda_max)
    F = np.fft.fftn(f.values) * mask
    return Field(f.grid, np.fft.ifftn(F).real)


def heat_kernel_valid(grid: TorusGrid, t: float) -> bool:
    return 4 * np.pi**2 * (grid.N // 2) ** 2 * t >= KERNEL_VALIDITY


def _kernel_1d(z, t, N):
    m = np.arange(-(N // 2), N // 2)
    w = np.exp(-4 * np.pi**2 * m.astype(float) ** 2 * t)
    z = np.asarray(z, dtype=float)
    return np.cos(2 * np.pi * np.multiply.outer(z, m)) @ w


def heat_kernel(x, y, t: float, grid: TorusGrid):
    """Heat kernel ``p_t(x, y)`` as the band-limited spectral sum.

    ``x`` and ``y`` are points (or broadcastable arrays of points, last axis
    of length ``dim``). The torus kernel factorizes over axes, so the sum is
    evaluated as a product of one-dimensional sums.
    """
    if t <= 0:
        raise ValueError(f"heat kernel needs t > 0, got {t}")
    if not heat_kernel_valid(grid, t):
        warnings.warn(
            f"t={t:g} is below the band-limit validity of N={grid.N}",
            HeatKernelResolutionWarning,
            stacklevel=2,
        )
    diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    if grid.dim == 1 and (diff.ndim == 0 or diff.shape[-1] != 1):
        diff = diff[..., None]
    out = 1.0
    for a in range(grid.dim):
        out = out * _kernel_1d(diff[..., a], t, grid.N)
    return out if np.ndim(out) else float(out)


def heat_kernel_row(index, t: float, grid: TorusGrid) -> Field:
    """``p_t(x, .)`` on every grid point, for ``x`` the grid point ``index``."""
    if t <= 0:
        raise ValueError(f"heat kernel needs t > 0, got {t}")
    if not heat_kernel_valid(grid, t):
        warnings.warn(
            f"t={t:g} is below the band-limit validity of N={grid.N}",
            HeatKernelResolutionWarning,
            stacklevel=2,
        )
    delta = np.zeros(grid.shape)
    delta[tuple(np.atleast_1d(index))] = grid.size
    return heat_evolve(Field(grid, delta), t)
