"""Uniform grids on the unit torus and real-valued grid functions.

The torus is ``[0, 1)^dim`` with the probability (Lebesgue) measure, so every
integral is a grid mean and every norm is taken with respect to a measure of
total mass one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class GridError(ValueError):
    """Raised for malformed grids or fields."""


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid with ``N`` points per axis on ``[0, 1)^dim``."""

    dim: int
    N: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise GridError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.N < 16 or self.N & (self.N - 1):
            raise GridError(f"N must be a power of two >= 16, got {self.N}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.dim

    @property
    def size(self) -> int:
        return self.N**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    def axis(self) -> np.ndarray:
        return np.arange(self.N) / self.N

    def coords(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays, one per axis, indexed like field values."""
        ax = self.axis()
        return tuple(np.meshgrid(*([ax] * self.dim), indexing="ij"))

    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Integer wave-vector components in ``[-N/2, N/2)`` in FFT order."""
        k = np.fft.fftfreq(self.N, d=1.0 / self.N).astype(np.int64)
        return tuple(np.meshgrid(*([k] * self.dim), indexing="ij"))

    def mode_levels(self) -> np.ndarray:
        """``|m|^2`` for every Fourier mode, in FFT layout."""
        return sum(k * k for k in self.wavenumbers())

    def eigenvalues(self) -> np.ndarray:
        return 4.0 * np.pi**2 * self.mode_levels()

    def max_eigenvalue(self) -> float:
        return 4.0 * np.pi**2 * self.dim * (self.N // 2) ** 2


@dataclass(frozen=True, eq=False)
class Field:
    """A real function sampled at the points of a :class:`TorusGrid`.

    ``values[i1, ..., id]`` is the sample at ``(i1/N, ..., id/N)``. The
    stored array is read-only.
    """

    grid: TorusGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.size != self.grid.size:
            raise GridError(f"expected {self.grid.size} values, got {v.size}")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise GridError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: TorusGrid, func) -> "Field":
        """Sample ``func(*coords)`` on the grid."""
        return cls(grid, np.broadcast_to(func(*grid.coords()), grid.shape))

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __mul__(self, alpha):
        return Field(self.grid, alpha * self.values)

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, Field):
            _check_same_grid(self, other)
            return Field(self.grid, self.values + other.values)
        return Field(self.grid, self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Field):
            _check_same_grid(self, other)
            return Field(self.grid, self.values - other.values)
        return Field(self.grid, self.values - other)

    def mean(self) -> float:
        return float(self.values.mean())

    def is_zero(self) -> bool:
        return not np.any(self.values)


def _check_same_grid(a: Field, b: Field):
    if a.grid != b.grid:
        raise GridError(f"grid mismatch: {a.grid} vs {b.grid}")


# Field serialization: one JSON header line, then the row-major payload.
# encoding "csv": one text line per row of the last axis, values in %.17g.
# encoding "f64le": raw little-endian float64.

def save_field(f: Field, path, encoding: str = "csv") -> None:
    path = Path(path)
    header = {"dim": f.grid.dim, "N": f.grid.N, "encoding": encoding}
    head = (json.dumps(header, sort_keys=True) + "\n").encode()
    if encoding == "csv":
        rows = f.values.reshape(-1, f.grid.N)
        body = "".join(",".join(f"{x:.17g}" for x in row) + "\n" for row in rows)
        payload = body.encode()
    elif encoding == "f64le":
        payload = f.values.astype("<f8").tobytes(order="C")
    else:
        raise GridError(f"unknown encoding {encoding!r}")
    try:
        path.write_bytes(head + payload)
    except OSError as exc:
        raise OSError(f"cannot write field to {path}: {exc}") from exc


def load_field(path) -> Field:
    path = Path(path)
    raw = path.read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise GridError(f"{path}: missing header line")
    try:
        header = json.loads(raw[:nl])
        grid = TorusGrid(int(header["dim"]), int(header["N"]))
        encoding = header.get("encoding", "csv")
    except (ValueError, KeyError, TypeError) as exc:
        raise GridError(f"{path}: bad header: {exc}") from exc
    body = raw[nl + 1 :]
    if encoding == "csv":
        values = np.array(
            [float(x) for line in body.decode().splitlines() if line for x in line.split(",")]
        )
    elif encoding == "f64le":
        values = np.frombuffer(body, dtype="<f8")
    else:
        raise GridError(f"{path}: unknown encoding {encoding!r}")
    return Field(grid, values)
