"""The heat semigroup ``exp(-t L)`` as a Fourier multiplier on grid fields."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FitError
from .grid import GridField, fmt
from .kernel import WRAP_TOL, check_wraparound, real_symbol
from .quadrature import LineFit, fit_line


def _apply_spectrum(u_hat: np.ndarray, grid, sigma: float, t: float) -> np.ndarray:
    return np.fft.irfftn(u_hat * np.exp(-t * real_symbol(grid, sigma)), s=grid.shape, axes=tuple(range(grid.d)))


def apply_semigroup(u: GridField, t: float, sigma: float, wrap_tol: float | None = WRAP_TOL) -> GridField:
    """``exp(-t L) u``; the anti-wraparound check runs on the result."""
    if not t >= 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    if t == 0:
        return u
    vals = _apply_spectrum(np.fft.rfftn(u.values), u.grid, sigma, t)
    check_wraparound(u.grid, vals, wrap_tol, what="evolved field")
    return GridField(u.grid, vals)


@dataclass(frozen=True)
class DecayCurve:
    times: np.ndarray
    sup_norm: np.ndarray
    l1_mass: np.ndarray

    def pairs(self) -> list[tuple[float, float]]:
        return [(float(t), float(v)) for t, v in zip(self.times, self.sup_norm)]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "sup_norm", "l1_mass"])
            for row in zip(self.times, self.sup_norm, self.l1_mass):
                w.writerow([fmt(v) for v in row])


def supnorm_decay_curve(u0: GridField, sigma: float, times, wrap_tol: float | None = WRAP_TOL) -> DecayCurve:
    """``||exp(-t L) u0||_sup`` on an increasing list of times.

    Every time is reached by one multiplier application from ``t = 0``.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise DomainError("times must be a nonempty, strictly increasing list of positive reals")
    if u0.min_value < -1e-9 or u0.sup_norm == 0.0:
        raise DomainError("initial data must be nonnegative and not identically zero")
    u_hat = np.fft.rfftn(u0.values)
    sup = np.empty(times.size)
    mass = np.empty(times.size)
    for i, t in enumerate(times):
        vals = _apply_spectrum(u_hat, u0.grid, sigma, t)
        check_wraparound(u0.grid, vals, wrap_tol, what="evolved field")
        sup[i] = np.max(np.abs(vals))
        mass[i] = u0.grid.cell_volume * np.abs(vals).sum()
    return DecayCurve(times, sup, mass)


def fit_decay_exponent(curve, window: tuple[float, float]) -> LineFit:
    """Least-squares slope of log(value) against log(t) over ``window``."""
    if isinstance(curve, DecayCurve):
        t, v = curve.times, curve.sup_norm
    else:
        arr = np.asarray(list(curve), dtype=float)
        t, v = arr[:, 0], arr[:, 1]
    lo, hi = window
    sel = (t >= lo) & (t <= hi)
    if sel.sum() < 5:
        raise FitError(f"need at least 5 points in window [{lo:g}, {hi:g}], got {int(sel.sum())}")
    if np.any(v[sel] <= 0):
        raise FitError("values must be positive for a log-log fit")
    return fit_line(np.log(t[sel]), np.log(v[sel]), min_points=5)
