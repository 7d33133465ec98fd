"""Panel quadrature in log space and small least-squares helpers.

Integrands that span hundreds of orders of magnitude (power laws sampled out to
t ~ 2**40, exponential time weights) are integrated through their logarithm so
that no panel ever overflows or underflows.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import logsumexp

from .errors import FitError

DEFAULT_ORDER = 16


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1] (read-only arrays)."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def log_panel_integrals(
    log_g: Callable[[np.ndarray], np.ndarray],
    edges: np.ndarray,
    order: int = DEFAULT_ORDER,
) -> np.ndarray:
    """``log`` of the Gauss-Legendre integral of ``exp(log_g)`` on each panel.

    ``edges`` has length P + 1; the result has length P.  Panels where the
    integrand is identically zero get ``-inf``.
    """
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    x, w = gauss_legendre(order)
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * x[None, :]
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        vals = np.asarray(log_g(nodes), dtype=float)
    logw = np.log(w)[None, :] + np.log(half)[:, None]
    return logsumexp(vals + logw, axis=1)


def panel_integrals(g: Callable[[np.ndarray], np.ndarray], edges, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Plain (linear-space) Gauss-Legendre panel integrals."""
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    x, w = gauss_legendre(order)
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * x[None, :]
    return (np.asarray(g(nodes), dtype=float) * w[None, :]).sum(axis=1) * half


class LineFit(NamedTuple):
    slope: float
    intercept: float
    residual: float  # root-mean-square residual


def fit_line(x, y, min_points: int = 2) -> LineFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < min_points or x.size != y.size:
        raise FitError(f"need at least {min_points} points for a line fit, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise FitError("non-finite values in fit data")
    if np.ptp(x) == 0.0:
        raise FitError("degenerate abscissae")
    slope, intercept = np.polyfit(x, y, 1)
    res = y - (slope * x + intercept)
    return LineFit(float(slope), float(intercept), float(np.sqrt(np.mean(res**2))))


class TailFit(NamedTuple):
    """Fit of log panel integrals ``L_k`` over dyadic panel index ``k``.

    ``L_k ~ a + b*k + c*2**k``.  The ``c`` term picks up exponential factors
    e^{theta t}; when it is negligible the power-law growth is ``b``.
    """

    exponential: bool
    rate_sign: int  # sign of the exponential term, 0 when power-law
    log2_growth: float  # slope of log2(I_k) per panel for the power-law branch


def fit_dyadic_tail(log_I: np.ndarray, ks: np.ndarray, n_exp: int = 6, n_pow: int = 3) -> TailFit:
    """Classify the growth of dyadic panel integrals.

    The exponential term is kept only if it moves ``log I`` by at least one
    nat across the final panel; otherwise the last ``n_pow`` panels give the
    power-law slope.
    """
    log_I = np.asarray(log_I, dtype=float)
    ks = np.asarray(ks, dtype=float)
    if log_I.size < max(n_exp, n_pow):
        raise FitError("too few panels for a tail fit")
    kk = ks[-n_exp:]
    yy = log_I[-n_exp:]
    scale = 2.0 ** kk[-1]
    A = np.column_stack([np.ones_like(kk), kk - kk[-1], 2.0**kk / scale])
    coef, *_ = np.linalg.lstsq(A, yy, rcond=None)
    c_eff = coef[2]  # change of log I attributable to the exponential term at the last panel
    if abs(c_eff) >= 1.0:
        return TailFit(True, int(np.sign(c_eff)), float("nan"))
    fit = fit_line(ks[-n_pow:], log_I[-n_pow:] / np.log(2.0))
    return TailFit(False, 0, fit.slope)


def geometric_tail(log_last: float, log2_growth: float) -> float:
    """Sum of the panels beyond the last one if they keep shrinking by 2**log2_growth."""
    r = 2.0**log2_growth
    if not r < 1.0:
        return float("inf")
    return float(np.exp(log_last) * r / (1.0 - r))
