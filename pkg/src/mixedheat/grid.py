"""Periodic uniform grids on [-L, L)^d and sampled fields on them.

Frequency convention: along each axis the lattice is ``xi_k = pi k / L`` with
``k`` in ``{-n/2, ..., n/2 - 1}``, stored in FFT order.  Fields are stored with
``x = 0`` at index ``n/2`` on every axis (the usual ``fftshift`` layout).
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np

from .errors import DomainError

DEFAULT_MAX_POINTS = 2**24

MAGIC = b"MLNK"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sBBBB3d")  # magic, version, d, log2 n, reserved, L, sigma, t
assert _HEADER.size == 32


@dataclass(frozen=True)
class GridSpec:
    d: int
    n: int
    half_width: float
    max_points: int = DEFAULT_MAX_POINTS

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise DomainError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.n < 2 or self.n & (self.n - 1):
            raise DomainError(f"points per axis must be a power of two, got {self.n}")
        if not self.half_width > 0:
            raise DomainError(f"half_width must be positive, got {self.half_width}")
        if self.n**self.d > self.max_points:
            raise DomainError(f"{self.n}^{self.d} points exceeds the cap of {self.max_points}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.n)

    @property
    def nyquist(self) -> float:
        """Largest |xi| along a single axis."""
        return np.pi * self.n / (2.0 * self.half_width)

    def radius_squared(self, center=None) -> np.ndarray:
        """|x - center|^2 on the grid."""
        center = np.zeros(self.d) if center is None else np.broadcast_to(np.asarray(center, float), (self.d,))
        axes = [self.axis - c for c in center]
        r2 = np.zeros(self.shape)
        for i, a in enumerate(axes):
            sh = [1] * self.d
            sh[i] = self.n
            r2 = r2 + a.reshape(sh) ** 2
        return r2


@lru_cache(maxsize=32)
def wavenumber_squared(grid: GridSpec, real: bool = False) -> np.ndarray:
    """|xi|^2 on the full (``real=False``) or half-spectrum (``rfftn``) lattice."""
    k = 2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.spacing)
    axes = [k] * grid.d
    if real:
        axes[-1] = 2.0 * np.pi * np.fft.rfftfreq(grid.n, d=grid.spacing)
    out = np.zeros([a.size for a in axes])
    for i, a in enumerate(axes):
        sh = [1] * grid.d
        sh[i] = a.size
        out = out + a.reshape(sh) ** 2
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class GridField:
    """Real samples on a grid; arrays are frozen on construction."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.shape != self.grid.shape:
            raise DomainError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @cached_property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    @cached_property
    def l1_mass(self) -> float:
        return float(self.grid.cell_volume * np.abs(self.values).sum())

    @property
    def min_value(self) -> float:
        return float(self.values.min())

    def __mul__(self, a: float) -> GridField:
        return GridField(self.grid, a * self.values)

    __rmul__ = __mul__

    def __add__(self, other: GridField) -> GridField:
        return GridField(self.grid, self.values + other.values)


def gaussian_bump(grid: GridSpec, amplitude: float, width: float, center=None) -> GridField:
    """``A exp(-|x - c|^2 / w^2)``."""
    if not amplitude > 0 or not width > 0:
        raise DomainError("Gaussian bump needs positive amplitude and width")
    return GridField(grid, amplitude * np.exp(-grid.radius_squared(center) / width**2))


def smooth_plateau(grid: GridSpec, amplitude: float, radius: float, edge: float, center=None) -> GridField:
    """Smoothed indicator ``A/2 (1 + tanh((R - |x - c|) / edge))``."""
    if not (amplitude > 0 and radius > 0 and edge > 0):
        raise DomainError("plateau needs positive amplitude, radius and edge width")
    r = np.sqrt(grid.radius_squared(center))
    return GridField(grid, 0.5 * amplitude * (1.0 + np.tanh((radius - r) / edge)))


# --------------------------------------------------------------------------
# file formats


def write_array_file(path, field: GridField, sigma: float = 0.0, t: float = 0.0) -> None:
    """Binary layout: 32-byte little-endian header then float64 values, C order."""
    g = field.grid
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, g.d, g.n.bit_length() - 1, 0, g.half_width, sigma, t)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_array_file(path) -> tuple[GridField, float, float]:
    """Returns ``(field, sigma, t)``."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise DomainError(f"{path}: truncated header")
    magic, version, d, log2n, _, L, sigma, t = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DomainError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise DomainError(f"{path}: unsupported version {version}")
    grid = GridSpec(d=d, n=1 << log2n, half_width=L)
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if data.size != grid.n**d:
        raise DomainError(f"{path}: expected {grid.n**d} values, found {data.size}")
    return GridField(grid, data.reshape(grid.shape)), sigma, t


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_field_csv(path, field: GridField) -> None:
    """Columns ``x1..xd, value``."""
    g = field.grid
    coords = np.meshgrid(*([g.axis] * g.d), indexing="ij")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(g.d)] + ["value"] if g.d > 1 else ["x", "value"])
        flat = [c.ravel() for c in coords] + [field.values.ravel()]
        for row in zip(*flat):
            w.writerow([fmt(v) for v in row])
