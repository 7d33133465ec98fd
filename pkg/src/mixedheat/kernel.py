"""Heat kernel of ``L = -Delta + (-Delta)^sigma`` on a periodic box.

The kernel is built from its Fourier symbol ``m(xi) = |xi|^2 + |xi|^{2 sigma}``:
``p_t`` is the inverse transform of ``exp(-t m)``.  A second route convolves
the Gaussian heat kernel with the fractional factor ``H_t`` (inverse
transform of ``exp(-t |xi|^{2 sigma})``); the two must agree.

Two admissibility checks guard every construction:

* anti-aliasing: ``exp(-t m)`` at the axis Nyquist frequency below
  ``alias_tol`` so the truncated Fourier series loses nothing;
* anti-wraparound: the kernel on the box faces, relative to its peak, below
  ``wrap_tol``.  Fractional kernels have algebraic tails ``~ t |x|^{-d-2 sigma}``
  so an absolute threshold is unattainable; the ratio is what controls the
  periodisation error.  ``wrap_tol=None`` skips the check when the periodic
  kernel itself is the object of interest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainCoverageError, DomainError, ResolutionError
from .grid import GridField, GridSpec, wavenumber_squared

ALIAS_TOL = 1e-14
WRAP_TOL = 1e-2


def _check_sigma(sigma: float) -> None:
    if not 0.0 < sigma < 1.0:
        raise DomainError(f"sigma must lie in (0, 1), got {sigma}")


@dataclass(frozen=True, eq=False)
class SpectralSymbol:
    """``m(xi)`` sampled on the full FFT-ordered frequency lattice."""

    grid: GridSpec
    sigma: float
    values: np.ndarray

    def at(self, index) -> float:
        """Symbol value at a lattice multi-index ``k`` (signed integers)."""
        idx = tuple(int(k) % self.grid.n for k in np.atleast_1d(index))
        return float(self.values[idx])


def symbol_values(xi2: np.ndarray, sigma: float) -> np.ndarray:
    """``|xi|^2 + |xi|^{2 sigma}`` from ``|xi|^2``."""
    return xi2 + xi2**sigma


def build_symbol(grid: GridSpec, sigma: float) -> SpectralSymbol:
    _check_sigma(sigma)
    vals = symbol_values(np.asarray(wavenumber_squared(grid)), sigma)
    vals.setflags(write=False)
    return SpectralSymbol(grid, sigma, vals)


@lru_cache(maxsize=32)
def real_symbol(grid: GridSpec, sigma: float) -> np.ndarray:
    """Symbol on the ``rfftn`` half lattice (cached, read-only)."""
    _check_sigma(sigma)
    vals = symbol_values(np.asarray(wavenumber_squared(grid, real=True)), sigma)
    vals.setflags(write=False)
    return vals


def _next_pow2(x: float) -> int:
    return 1 << max(1, math.ceil(math.log2(max(x, 2.0))))


def check_aliasing(grid: GridSpec, sigma: float, t: float, alias_tol: float = ALIAS_TOL) -> None:
    xi = grid.nyquist
    tail = math.exp(-t * (xi**2 + xi ** (2 * sigma)))
    if tail >= alias_tol:
        need_xi = math.sqrt(math.log(1.0 / alias_tol) / t)
        n_sugg = _next_pow2(2.0 * grid.half_width * need_xi / math.pi)
        raise ResolutionError(
            f"anti-aliasing check failed: exp(-t m) at Nyquist = {tail:.3g} >= {alias_tol:g} "
            f"(t={t:g}, n={grid.n}, L={grid.half_width:g}); suggest n >= {n_sugg}"
        )


def boundary_ratio(values: np.ndarray) -> float:
    """max |values| on the box faces (index 0 on any axis) over max |values|."""
    peak = float(np.max(np.abs(values)))
    if peak == 0.0:
        return 0.0
    face = 0.0
    for ax in range(values.ndim):
        face = max(face, float(np.max(np.abs(np.take(values, 0, axis=ax)))))
    return face / peak


def check_wraparound(grid: GridSpec, values: np.ndarray, wrap_tol: float | None, what: str = "kernel") -> float:
    ratio = boundary_ratio(values)
    if wrap_tol is not None and ratio > wrap_tol:
        raise ResolutionError(
            f"anti-wraparound check failed: {what} boundary/peak = {ratio:.3g} > {wrap_tol:g} "
            f"(L={grid.half_width:g}); suggest L >= {2 * grid.half_width:g} with n scaled accordingly"
        )
    return ratio


def _from_multiplier(grid: GridSpec, mult_r: np.ndarray) -> np.ndarray:
    """Centered real kernel whose (continuous) Fourier transform is ``mult_r``."""
    vals = np.fft.irfftn(mult_r, s=grid.shape, axes=tuple(range(grid.d))) / grid.cell_volume
    return np.fft.fftshift(vals)


@dataclass(frozen=True, eq=False)
class KernelSample:
    t: float
    values: GridField
    grid: GridSpec
    sigma: float
    boundary_ratio: float
    fractional_factor: GridField | None = None


def kernel_from_symbol(
    grid: GridSpec,
    sigma: float,
    t: float,
    alias_tol: float = ALIAS_TOL,
    wrap_tol: float | None = WRAP_TOL,
) -> KernelSample:
    _check_sigma(sigma)
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    check_aliasing(grid, sigma, t, alias_tol)
    vals = _from_multiplier(grid, np.exp(-t * real_symbol(grid, sigma)))
    ratio = check_wraparound(grid, vals, wrap_tol)
    return KernelSample(t, GridField(grid, vals), grid, sigma, ratio)


def fractional_factor(grid: GridSpec, sigma: float, t: float) -> GridField:
    """Periodic ``H_t``: inverse transform of ``exp(-t |xi|^{2 sigma})``.

    No admissibility check: for small ``sigma`` the factor alone is never
    band-limited; only its product with the Gaussian factor is.
    """
    _check_sigma(sigma)
    xi2 = np.asarray(wavenumber_squared(grid, real=True))
    return GridField(grid, _from_multiplier(grid, np.exp(-t * xi2**sigma)))


def gaussian_factor(grid: GridSpec, t: float) -> GridField:
    """Sampled ``(4 pi t)^{-d/2} exp(-|x|^2 / (4 t))``."""
    return GridField(grid, (4 * np.pi * t) ** (-grid.d / 2) * np.exp(-grid.radius_squared() / (4 * t)))


def periodic_convolution(a: GridField, b: GridField) -> np.ndarray:
    """``h^d sum_y a(x - y) b(y)`` for centered fields; result is centered."""
    g = a.grid
    fa = np.fft.rfftn(np.fft.ifftshift(a.values))
    fb = np.fft.rfftn(np.fft.ifftshift(b.values))
    return np.fft.fftshift(np.fft.irfftn(fa * fb, s=g.shape, axes=tuple(range(g.d)))) * g.cell_volume


def kernel_convolution_form(
    grid: GridSpec,
    sigma: float,
    t: float,
    alias_tol: float = ALIAS_TOL,
    wrap_tol: float | None = WRAP_TOL,
) -> KernelSample:
    """``p_t = G_t * H_t`` with both factors sampled and convolved spectrally."""
    _check_sigma(sigma)
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    check_aliasing(grid, sigma, t, alias_tol)
    H = fractional_factor(grid, sigma, t)
    vals = periodic_convolution(gaussian_factor(grid, t), H)
    ratio = check_wraparound(grid, vals, wrap_tol)
    return KernelSample(t, GridField(grid, vals), grid, sigma, ratio, H)


# --------------------------------------------------------------------------
# property checks


def reflect(values: np.ndarray) -> np.ndarray:
    """Values at ``-x`` on the centered periodic grid."""
    out = values
    for ax in range(values.ndim):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


@dataclass(frozen=True)
class P1Report:
    min_value: float
    mass_error: float
    symmetry_error: float
    positive_ok: bool
    mass_ok: bool
    symmetry_ok: bool

    @property
    def passed(self) -> bool:
        return self.positive_ok and self.mass_ok and self.symmetry_ok


def verify_p1(k: KernelSample, positivity_slack: float = 1e-9, mass_tol: float = 1e-6, symmetry_tol: float = 1e-12) -> P1Report:
    """Positivity, unit mass and evenness of a kernel sample."""
    v = k.values.values
    mn = float(v.min())
    mass_err = abs(k.grid.cell_volume * float(v.sum()) - 1.0)
    sym_err = float(np.max(np.abs(v - reflect(v))))
    return P1Report(mn, mass_err, sym_err, mn >= -positivity_slack, mass_err <= mass_tol, sym_err <= symmetry_tol)


def verify_semigroup_property(
    grid: GridSpec, sigma: float, t: float, s: float, wrap_tol: float | None = WRAP_TOL
) -> float:
    """sup-norm gap between ``p_t * p_s`` (discrete convolution) and ``p_{t+s}``."""
    if not (t > 0 and s > 0):
        raise DomainError("t and s must be positive")
    pt = kernel_from_symbol(grid, sigma, t, wrap_tol=wrap_tol)
    ps = kernel_from_symbol(grid, sigma, s, wrap_tol=wrap_tol)
    pts = kernel_from_symbol(grid, sigma, t + s, wrap_tol=wrap_tol)
    conv = periodic_convolution(pt.values, ps.values)
    return float(np.max(np.abs(conv - pts.values.values)))


@dataclass(frozen=True)
class BoundsReport:
    t_list: tuple[float, ...]
    upper_const_estimates: tuple[float, ...]
    lower_const_estimates: tuple[float, ...]
    upper_ok: bool
    lower_ok: bool

    @property
    def c_upper(self) -> float:
        """Empirical upper constant: the largest scaled peak."""
        return max(self.upper_const_estimates)

    @property
    def c_lower(self) -> float:
        return min(self.lower_const_estimates)


def verify_bounds(grid: GridSpec, sigma: float, t_list, wrap_tol: float | None = WRAP_TOL) -> BoundsReport:
    """Empirical constants of ``p_t <= C t^{-d/(2 sigma)}`` and of the lower
    bound ``p_t(x) >= c t^{-d/(2 sigma)}`` on ``|x| <= sqrt(t)`` for ``t > 1``.
    """
    t_list = tuple(float(t) for t in t_list)
    if not t_list:
        raise DomainError("t_list is empty")
    if any(t <= 1.0 for t in t_list):
        raise DomainError("the lower bound is stated for t > 1 only")
    too_wide = [t for t in t_list if math.sqrt(t) > grid.half_width]
    if too_wide:
        raise DomainCoverageError(f"sqrt(t) exceeds L={grid.half_width:g} for t in {too_wide}")
    scale = grid.d / (2.0 * sigma)
    r2 = grid.radius_squared()
    upper, lower = [], []
    for t in t_list:
        p = kernel_from_symbol(grid, sigma, t, wrap_tol=wrap_tol).values.values
        upper.append(float(p.max()) * t**scale)
        lower.append(float(p[r2 <= t].min()) * t**scale)
    upper_ok = max(upper) / min(upper) <= 10.0
    lower_ok = min(lower) > 0 and min(lower) >= 1e-3 * max(lower)
    return BoundsReport(t_list, tuple(upper), tuple(lower), upper_ok, lower_ok)
