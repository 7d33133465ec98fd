"""Nonlinearity ``f`` and time weight ``h`` families, minorant/majorant envelopes.

Every family is a small frozen dataclass that evaluates itself (``__call__``)
and its logarithm (``log``).  The log form is what the quadrature code uses:
power laws sampled at t ~ 2**40 underflow long before they stop mattering.

The minorant and majorant of ``f`` are

    f_m(u) = inf_{0<a<1} f(a u) / f(a),     f_M(u) = sup_{0<a<1} f(a u) / f(a),

so that ``f(a) f_m(u) <= f(a u) <= f(a) f_M(u)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Union

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import CriterionInapplicableError, DomainError, RangeError, UnsupportedFamilyError
from .quadrature import fit_line, geometric_tail, log_panel_integrals

ALPHA_MIN = 1e-8
DEFAULT_ALPHA_GRID = 256
CONVEXITY_SLACK = 1e-12
TAIL_MARGIN = 0.02


def _as_nonneg(u, what="u"):
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError(f"{what} must be nonnegative, got {u!r}")
    return arr


def _ret(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


# --------------------------------------------------------------------------
# nonlinearities


@dataclass(frozen=True)
class Power:
    """``f(u) = coef * u**p``.

    ``diagnostic=True`` admits ``p <= 1`` and ``coef == 0`` (f identically
    zero) so that negative tests and pure-diffusion runs can be expressed.
    """

    p: float
    coef: float = 1.0
    diagnostic: bool = False
    description: str = ""

    def __post_init__(self):
        if self.coef < 0 or not math.isfinite(self.p):
            raise DomainError(f"invalid Power parameters p={self.p}, coef={self.coef}")
        if not self.diagnostic and (self.p <= 1 or self.coef <= 0):
            raise DomainError(f"Power requires p > 1 and coef > 0 (got p={self.p}, coef={self.coef})")
        if self.p <= 0:
            raise DomainError("Power requires p > 0 even in diagnostic mode")

    def __call__(self, u):
        u = _as_nonneg(u)
        return _ret(self.coef * u**self.p)

    def log(self, u):
        with np.errstate(divide="ignore"):
            return math.log(self.coef) + self.p * np.log(u) if self.coef > 0 else np.full_like(np.asarray(u, float), -np.inf)

    @property
    def small_order(self) -> float:
        return self.p

    @property
    def label(self) -> str:
        return self.description or f"u^{self.p:g}"


@dataclass(frozen=True)
class PowerSum:
    """``f(u) = u**p + u**q`` with ``p >= q > 1``."""

    p: float
    q: float
    diagnostic: bool = False
    description: str = ""

    def __post_init__(self):
        if not self.diagnostic and not (self.p >= self.q > 1):
            raise DomainError(f"PowerSum requires p >= q > 1 (got p={self.p}, q={self.q})")
        if min(self.p, self.q) <= 0:
            raise DomainError("PowerSum exponents must be positive")

    def __call__(self, u):
        u = _as_nonneg(u)
        return _ret(u**self.p + u**self.q)

    def log(self, u):
        with np.errstate(divide="ignore"):
            lu = np.log(u)
        return np.logaddexp(self.p * lu, self.q * lu)

    @property
    def small_order(self) -> float:
        return min(self.p, self.q)

    @property
    def label(self) -> str:
        return self.description or f"u^{self.p:g}+u^{self.q:g}"


@dataclass(frozen=True)
class LogPower:
    """``f(u) = (1 + u) * ln(1 + u)**p``; behaves like ``u**p`` near zero."""

    p: float
    diagnostic: bool = False
    description: str = ""

    def __post_init__(self):
        if not self.diagnostic and not self.p > 1:
            raise DomainError(f"LogPower requires p > 1 (got p={self.p})")
        if self.p <= 0:
            raise DomainError("LogPower exponent must be positive")

    def __call__(self, u):
        u = _as_nonneg(u)
        return _ret((1.0 + u) * np.log1p(u) ** self.p)

    def log(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            return np.log1p(u) + self.p * np.log(np.log1p(u))

    @property
    def small_order(self) -> float:
        return self.p

    @property
    def label(self) -> str:
        return self.description or f"(1+u)ln(1+u)^{self.p:g}"


@dataclass(frozen=True)
class CustomTable:
    """Tabulated ``f`` with piecewise-linear (hence monotone-preserving) interpolation.

    The table must start at ``u = 0`` with ``f = 0``.  Whether the data is
    monotone and convex is checked on the samples, not proven.
    """

    u: tuple[float, ...]
    f: tuple[float, ...]
    description: str = "custom"

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if u.ndim != 1 or u.size < 3 or u.size != f.size:
            raise DomainError("CustomTable needs matching 1-d samples with at least 3 points")
        if u[0] != 0.0 or f[0] != 0.0:
            raise DomainError("CustomTable must start at (0, 0)")
        if np.any(np.diff(u) <= 0):
            raise DomainError("CustomTable abscissae must be strictly increasing")
        if np.any(f[1:] <= 0):
            raise DomainError("CustomTable values must be positive for u > 0")
        object.__setattr__(self, "u", tuple(map(float, u)))
        object.__setattr__(self, "f", tuple(map(float, f)))

    @cached_property
    def _arrays(self):
        return np.asarray(self.u), np.asarray(self.f)

    @property
    def u_max(self) -> float:
        return self.u[-1]

    @cached_property
    def is_monotone_convex(self) -> bool:
        u, f = self._arrays
        slopes = np.diff(f) / np.diff(u)
        return bool(np.all(slopes >= -CONVEXITY_SLACK) and np.all(np.diff(slopes) >= -CONVEXITY_SLACK))

    def __call__(self, u):
        arr = _as_nonneg(u)
        if np.any(arr > self.u_max):
            raise RangeError(f"query {float(np.max(arr))} outside table range [0, {self.u_max}]")
        us, fs = self._arrays
        return _ret(np.interp(arr, us, fs))

    def log(self, u):
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(self(u), dtype=float))

    @property
    def label(self) -> str:
        return self.description


NonlinearitySpec = Union[Power, PowerSum, LogPower, CustomTable]
BUILTIN_F = (Power, PowerSum, LogPower)


# --------------------------------------------------------------------------
# time weights


@dataclass(frozen=True)
class Constant:
    c: float = 1.0

    def __post_init__(self):
        if not (self.c >= 0 and math.isfinite(self.c)):
            raise DomainError(f"Constant weight must be nonnegative, got {self.c}")

    def __call__(self, t):
        t = _as_nonneg(t, "t")
        return _ret(np.full_like(t, self.c))

    def log(self, t):
        with np.errstate(divide="ignore"):
            return np.full_like(np.asarray(t, dtype=float), math.log(self.c) if self.c > 0 else -np.inf)

    growth_power = 0.0
    exp_rate = 0.0


@dataclass(frozen=True)
class PowerT:
    r: float

    def __post_init__(self):
        if not self.r >= 0:
            raise DomainError(f"PowerT requires r >= 0, got {self.r}")

    def __call__(self, t):
        t = _as_nonneg(t, "t")
        return _ret(t**self.r)

    def log(self, t):
        with np.errstate(divide="ignore"):
            return self.r * np.log(t)

    @property
    def growth_power(self) -> float:
        return self.r

    exp_rate = 0.0


@dataclass(frozen=True)
class PowerSumT:
    r: float
    s: float

    def __post_init__(self):
        if not self.r >= self.s >= 0:
            raise DomainError(f"PowerSumT requires r >= s >= 0, got r={self.r}, s={self.s}")

    def __call__(self, t):
        t = _as_nonneg(t, "t")
        return _ret(t**self.r + t**self.s)

    def log(self, t):
        with np.errstate(divide="ignore"):
            lt = np.log(t)
        return np.logaddexp(self.r * lt, self.s * lt)

    @property
    def growth_power(self) -> float:
        return max(self.r, self.s)

    exp_rate = 0.0


@dataclass(frozen=True)
class ExpT:
    theta: float

    def __post_init__(self):
        if self.theta == 0 or not math.isfinite(self.theta):
            raise DomainError("ExpT requires a finite theta != 0")

    def __call__(self, t):
        t = _as_nonneg(t, "t")
        return _ret(np.exp(self.theta * t))

    def log(self, t):
        return self.theta * np.asarray(t, dtype=float)

    growth_power = 0.0

    @property
    def exp_rate(self) -> float:
        return self.theta


TimeWeightSpec = Union[Constant, PowerT, PowerSumT, ExpT]


def eval_f(spec: NonlinearitySpec, u):
    return spec(u)


def eval_h(spec: TimeWeightSpec, t):
    return spec(t)


def lipschitz_slope(spec: NonlinearitySpec, M: float, samples: int = 65) -> float:
    """Largest discrete slope of ``f`` over ``[0, M]``."""
    if M <= 0:
        return 0.0
    u = np.linspace(0.0, M, samples)
    return float(np.max(np.abs(np.diff(spec(u))) / np.diff(u)))


# --------------------------------------------------------------------------
# minorant / majorant


def _log_ratio(spec, alpha, u):
    return spec.log(alpha * u) - spec.log(alpha)


def _alpha_grid(u: float, size: int) -> np.ndarray:
    lo = ALPHA_MIN / max(u, 1.0)  # keeps alpha*u small enough to see the a -> 0 limit
    half = size // 2
    return np.unique(np.concatenate([np.geomspace(lo, 0.5, half), 1.0 - np.geomspace(ALPHA_MIN, 0.5, size - half)]))


@lru_cache(maxsize=65536)
def _log_extremum(spec, u: float, size: int, sign: int) -> float:
    """log of inf (sign=+1) or sup (sign=-1) of f(a u)/f(a) over a in (0, 1)."""
    if u == 0.0:
        return -math.inf
    if u == 1.0:
        return 0.0
    if isinstance(spec, CustomTable) and u > spec.u_max:
        raise RangeError(f"minorant at u={u} needs f beyond the table range {spec.u_max}")
    alphas = _alpha_grid(u, size)
    vals = sign * _log_ratio(spec, alphas, u)
    i = int(np.argmin(vals))
    best = float(vals[i])
    lo, hi = alphas[max(i - 1, 0)], alphas[min(i + 1, alphas.size - 1)]
    if hi > lo:
        res = minimize_scalar(
            lambda a: sign * float(_log_ratio(spec, a, u)),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-12 * (hi - lo) + 1e-300},
        )
        if res.success and np.isfinite(res.fun):
            best = min(best, float(res.fun))
    return sign * best


def _check_grid_size(alpha_grid_size: int):
    if alpha_grid_size < 16:
        raise DomainError("alpha_grid_size must be >= 16")


def minorant_numeric(spec: NonlinearitySpec, u: float, alpha_grid_size: int = DEFAULT_ALPHA_GRID) -> float:
    """Numerical ``inf_{0<a<1} f(a u)/f(a)``.

    Geometric alpha grid clustered at both ends of (0, 1), then bounded
    Brent refinement around the best grid point.
    """
    _check_grid_size(alpha_grid_size)
    u = float(_as_nonneg(u))
    return math.exp(_log_extremum(spec, u, alpha_grid_size, +1))


def majorant_numeric(spec: NonlinearitySpec, u: float, alpha_grid_size: int = DEFAULT_ALPHA_GRID) -> float:
    """Numerical ``sup_{0<a<1} f(a u)/f(a)``."""
    _check_grid_size(alpha_grid_size)
    u = float(_as_nonneg(u))
    return math.exp(_log_extremum(spec, u, alpha_grid_size, -1))


def _closed_pair(spec, u):
    u = _as_nonneg(u)
    if isinstance(spec, Power):
        a = u**spec.p
        return a, a
    if isinstance(spec, PowerSum):
        a, b = 0.5 * (u**spec.p + u**spec.q), u**spec.q
    elif isinstance(spec, LogPower):
        a = u**spec.p
        b = (1.0 + u) * np.log1p(u) ** spec.p / (2.0 * math.log(2.0) ** spec.p)
    else:
        raise UnsupportedFamilyError(f"no closed-form envelope for {type(spec).__name__}")
    return np.minimum(a, b), np.maximum(a, b)


def minorant_closed_form(spec: NonlinearitySpec, u):
    """Closed-form minorant for the built-in families.

    For ``LogPower`` the two-branch formula is exact when ``p >= 2``; for
    ``1 < p < 2`` the infimum can sit at an interior alpha and the formula
    is only an upper estimate of the true minorant.
    """
    return _ret(_closed_pair(spec, u)[0])


def majorant_closed_form(spec: NonlinearitySpec, u):
    return _ret(_closed_pair(spec, u)[1])


# --------------------------------------------------------------------------
# structural conditions


@dataclass(frozen=True)
class MinorantReport:
    integral_one_to_inf_inv_fm: float  # +inf when divergent, nan when undetermined
    integral_status: str  # "finite" | "divergent" | "undetermined"
    tail_exponent: float  # local power-law exponent of 1/f_m at the far end
    limit_fM_over_u_at_zero: float
    fM_over_u_slope: float
    condition_1_5_holds: bool
    diagnostics: tuple[tuple[float, float, float], ...] = field(repr=False)


def _integral_inv_minorant(spec, k_max: int, size: int):
    edges = 2.0 ** np.arange(k_max + 2)
    if isinstance(spec, CustomTable) and spec.u_max < edges[-1]:
        raise RangeError(f"table reaches u={spec.u_max}; the 1/f_m integral needs u up to {edges[-1]:g}")

    def log_g(nodes):
        flat = [-_log_extremum(spec, float(v), size, +1) for v in nodes.ravel()]
        return np.asarray(flat).reshape(nodes.shape)

    log_I = log_panel_integrals(log_g, edges)
    ks = np.arange(k_max + 1)
    fit = fit_line(ks[-3:], log_I[-3:] / math.log(2.0))
    rho = fit.slope - 1.0
    if rho < -1.0 - TAIL_MARGIN:
        total = float(np.exp(log_I).sum()) + geometric_tail(log_I[-1], fit.slope)
        return total, "finite", rho
    if rho > -1.0 + TAIL_MARGIN:
        return math.inf, "divergent", rho
    return math.nan, "undetermined", rho


@lru_cache(maxsize=256)
def check_conditions_1_5(
    spec: NonlinearitySpec,
    k_max: int = 40,
    zero_tol: float = 1e-3,
    alpha_grid_size: int = DEFAULT_ALPHA_GRID,
) -> MinorantReport:
    """Check ``int_1^inf du/f_m(u) < inf`` and ``f_M(u)/u -> 0`` as ``u -> 0+``."""
    _check_grid_size(alpha_grid_size)
    integral, status, rho = _integral_inv_minorant(spec, k_max, alpha_grid_size)

    us = 10.0 ** -np.arange(1, 9)
    ratios = np.array([majorant_numeric(spec, float(v), alpha_grid_size) / v for v in us])
    if np.all(ratios == 0):
        slope, limit = math.inf, 0.0
    else:
        slope = fit_line(np.log(us), np.log(ratios)).slope
        # ratio ~ c u**slope: a positive slope extrapolates to zero
        limit = 0.0 if slope > TAIL_MARGIN else float(ratios[-1])

    diag_u = (1e-4, 1e-2, 0.5, 1.0, 2.0, 10.0, 100.0)
    diagnostics = tuple(
        (v, minorant_numeric(spec, v, alpha_grid_size), majorant_numeric(spec, v, alpha_grid_size))
        for v in diag_u
        if not (isinstance(spec, CustomTable) and v > spec.u_max)
    )
    holds = status == "finite" and limit < zero_tol
    return MinorantReport(integral, status, rho, limit, slope, holds, diagnostics)


def phi(spec: NonlinearitySpec, eps: float, g: float, max_panels: int = 10) -> float:
    """``Phi(g) = int_{g/eps}^inf dy / f_m(y)``.

    Substituting ``y = (g/eps) e^v`` turns the integrand into
    ``y / f_m(y)`` in ``v``; panels ``[0,1], [1,2], [2,4], ...`` are summed
    until negligible, otherwise the geometric decay of the last panels is
    extrapolated.
    """
    if not 0 < eps < 1:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    if not g > 0:
        raise DomainError(f"g must be positive, got {g}")
    report = check_conditions_1_5(spec)
    if report.integral_status != "finite":
        raise CriterionInapplicableError(f"int du/f_m diverges for {spec!r}; Phi is undefined")
    a = g / eps
    log_a = math.log(a)

    def log_g(v):
        out = np.empty_like(v)
        for idx, vv in np.ndenumerate(v):
            y = a * math.exp(vv)
            out[idx] = log_a + vv - _log_extremum(spec, y, DEFAULT_ALPHA_GRID, +1)
        return out

    v_max = math.log(np.finfo(float).max) - log_a - 1.0
    edges = [0.0, 1.0]
    while edges[-1] * 2 <= v_max and len(edges) <= max_panels:
        edges.append(edges[-1] * 2)
    log_I = log_panel_integrals(log_g, np.asarray(edges))
    total = float(np.exp(log_I).sum())
    last = float(np.exp(log_I[-1]))
    if last <= 1e-17 * total:
        return total
    # panels beyond [1, 2] double in length: I_{k+1}/I_k estimates the decay
    ratios = np.exp(np.diff(log_I[1:]))
    r = float(ratios[-1])
    if not r < 1.0:
        raise CriterionInapplicableError("Phi tail is not summable")
    return total + last * r / (1.0 - r)
