"""Blow-up criterion: divergence of ``int_1^inf h(t) t^k f(eps t^{-k}) dt``, ``k = d/(2 sigma)``.

Divergence of this integral for every ``eps > 0`` is equivalent to finite-time
blow-up of every nonnegative nontrivial solution.  Two classifiers are
provided: a numeric one (dyadic Gauss-Legendre panels plus a tail fit) and an
analytic one for the built-in families (dominant large-t power exponent).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .errors import (
    CriterionInapplicableError,
    DomainError,
    FitError,
    InconsistencyError,
    UnsupportedFamilyError,
)
from .grid import GridField
from .nonlinearity import (
    BUILTIN_F,
    Constant,
    ExpT,
    LogPower,
    NonlinearitySpec,
    Power,
    PowerSum,
    PowerSumT,
    PowerT,
    TimeWeightSpec,
    check_conditions_1_5,
    phi,
)
from .quadrature import DEFAULT_ORDER, fit_dyadic_tail, fit_line, geometric_tail, log_panel_integrals
from .semigroup import DecayCurve, supnorm_decay_curve

MARGIN_TOL = 0.05
CRITICAL_SLACK = 1e-12


class Status(str, Enum):
    DIVERGES = "Diverges"
    CONVERGES = "Converges"
    UNDETERMINED = "Undetermined"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class CriterionProblem:
    d: int
    sigma: float
    f: NonlinearitySpec
    h: TimeWeightSpec
    epsilon: float = 0.5

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise DomainError(f"d must be 1, 2 or 3, got {self.d}")
        if not 0 < self.sigma < 1:
            raise DomainError(f"sigma must lie in (0, 1), got {self.sigma}")
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")

    @property
    def k(self) -> float:
        """Decay exponent ``d / (2 sigma)``."""
        return self.d / (2.0 * self.sigma)

    def describe(self) -> dict:
        return {
            "d": self.d,
            "sigma": self.sigma,
            "epsilon": self.epsilon,
            "f": {"family": type(self.f).__name__, **_public_fields(self.f)},
            "h": {"family": type(self.h).__name__, **_public_fields(self.h)},
        }


def _public_fields(obj) -> dict:
    out = {}
    for fld in dataclasses.fields(obj):
        v = getattr(obj, fld.name)
        if fld.name in ("diagnostic", "description") and not v:
            continue
        out[fld.name] = list(v) if isinstance(v, tuple) else v
    return out


@dataclass(frozen=True)
class CriterionVerdict:
    status: Status
    fitted_tail_exponent: float  # rho with integrand ~ t^rho; nan when an exponential factor dominates
    exp_rate_sign: int  # sign of the detected exponential factor, 0 if none
    partial_integrals: tuple[float, ...]  # cumulative integral up to 2, 4, 8, ...
    margin: float  # |rho + 1|
    method: str
    note: str = ""

    def to_record(self, problem: CriterionProblem | None = None) -> dict:
        rec = {
            "status": str(self.status),
            "rho": None if math.isnan(self.fitted_tail_exponent) else self.fitted_tail_exponent,
            "exp_rate_sign": self.exp_rate_sign,
            "margin": None if math.isnan(self.margin) else self.margin,
            "method": self.method,
            "partials": [None if not math.isfinite(p) else p for p in self.partial_integrals],
            "note": self.note,
        }
        if problem is not None:
            rec = {"problem": problem.describe(), **rec}
        return rec


def log_integrand(problem: CriterionProblem, t):
    t = np.asarray(t, dtype=float)
    k = problem.k
    return problem.h.log(t) + k * np.log(t) + problem.f.log(problem.epsilon * t ** (-k))


def integrand(problem: CriterionProblem, t):
    """``h(t) t^k f(eps t^{-k})`` for ``t >= 1``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 1):
        raise DomainError(f"the criterion integrand is defined for t >= 1, got {t}")
    k = problem.k
    val = problem.h(t_arr) * t_arr**k * problem.f(problem.epsilon * t_arr ** (-k))
    return float(val) if np.ndim(val) == 0 else val


def _status_from_rho(rho: float, margin_tol: float) -> Status:
    if rho >= -1.0 + margin_tol:
        return Status.DIVERGES
    if rho <= -1.0 - margin_tol:
        return Status.CONVERGES
    return Status.UNDETERMINED


def _classify_log_panels(log_I: np.ndarray, margin_tol: float, method: str) -> CriterionVerdict:
    ks = np.arange(log_I.size)
    log_partials = np.logaddexp.accumulate(log_I)
    with np.errstate(over="ignore"):
        partials = tuple(float(v) for v in np.exp(log_partials))
    if np.all(np.isneginf(log_I)):
        return CriterionVerdict(Status.CONVERGES, -math.inf, 0, partials, math.inf, method, "integrand vanishes")
    if np.any(np.isnan(log_I)) or np.any(np.isposinf(log_I)):
        return CriterionVerdict(Status.DIVERGES, math.nan, 1, partials, math.nan, method, "saturation: panel overflow")
    finite = np.isfinite(log_I)
    if not np.all(finite):
        # integrand underflowed to exact zero after positive panels: decay already certified
        return CriterionVerdict(Status.CONVERGES, math.nan, -1, partials, math.nan, method, "saturation: panel underflow")
    fit = fit_dyadic_tail(log_I, ks)
    if fit.exponential:
        status = Status.DIVERGES if fit.rate_sign > 0 else Status.CONVERGES
        return CriterionVerdict(status, math.nan, fit.rate_sign, partials, math.nan, method, "exponential factor")
    rho = fit.log2_growth - 1.0
    return CriterionVerdict(_status_from_rho(rho, margin_tol), rho, 0, partials, abs(rho + 1.0), method)


def classify_numeric(
    problem: CriterionProblem,
    k_max: int = 40,
    margin_tol: float = MARGIN_TOL,
    order: int = DEFAULT_ORDER,
) -> CriterionVerdict:
    """Integrate over ``[2^k, 2^{k+1}]``, ``k = 0..k_max`` and fit the panel growth."""
    if k_max < 12:
        raise DomainError("k_max must be >= 12")
    edges = 2.0 ** np.arange(k_max + 2)
    log_I = log_panel_integrals(lambda t: log_integrand(problem, t), edges, order)
    return _classify_log_panels(log_I, margin_tol, "numeric")


def analytic_rho(f: NonlinearitySpec, h: TimeWeightSpec, k: float) -> float:
    """Dominant large-t exponent of ``h(t) t^k f(eps t^{-k})`` for power-type ``h``."""
    if not isinstance(f, BUILTIN_F):
        raise UnsupportedFamilyError(f"analytic classification needs a built-in f, got {type(f).__name__}")
    return h.growth_power + k * (1.0 - f.small_order)


def classify_analytic(problem: CriterionProblem) -> CriterionVerdict:
    f, h = problem.f, problem.h
    if not isinstance(f, BUILTIN_F):
        raise UnsupportedFamilyError(f"analytic classification needs a built-in f, got {type(f).__name__}")
    if (isinstance(h, Constant) and h.c == 0) or (isinstance(f, Power) and f.coef == 0):
        return CriterionVerdict(Status.CONVERGES, -math.inf, 0, (), math.inf, "analytic", "integrand vanishes")
    if isinstance(h, ExpT):
        sign = 1 if h.theta > 0 else -1
        status = Status.DIVERGES if sign > 0 else Status.CONVERGES
        return CriterionVerdict(status, math.nan, sign, (), math.nan, "analytic", "exponential factor")
    rho = analytic_rho(f, h, problem.k)
    status = Status.DIVERGES if rho >= -1.0 - CRITICAL_SLACK else Status.CONVERGES
    return CriterionVerdict(status, rho, 0, (), abs(rho + 1.0), "analytic")


# --------------------------------------------------------------------------
# Fujita thresholds


@dataclass(frozen=True)
class FujitaReport:
    family: str
    p_F: float
    method: str  # "closed_form" or "bisection_on_numeric"
    p_F_closed: float | None
    p_F_numeric: float | None
    gap: float | None
    stated_threshold: float | None = None
    note: str = ""

    def to_record(self) -> dict:
        return dataclasses.asdict(self)


def closed_form_threshold(f: NonlinearitySpec, h: TimeWeightSpec, d: int, sigma: float) -> float | None:
    """Fujita exponent where a closed formula is known (power or log-power f, power h)."""
    if isinstance(f, Power) and isinstance(h, Constant) and h.c > 0:
        return 1.0 + 2.0 * sigma / d
    if isinstance(f, LogPower) and isinstance(h, (PowerT, Constant)):
        r = h.r if isinstance(h, PowerT) else 0.0
        return 1.0 + 2.0 * sigma * (1.0 + r) / d
    return None


def stated_combined_threshold(h: TimeWeightSpec, d: int, sigma: float) -> float | None:
    """Threshold ``1 + 2 sigma (1 + s)/d`` quoted for ``u^p + u^q`` with ``h = t^r + t^s``.

    Recorded for comparison only: divergence of the four-term integrand is
    governed by the largest exponent, ``r - k (q - 1)``.
    """
    if isinstance(h, PowerSumT):
        return 1.0 + 2.0 * sigma * (1.0 + h.s) / d
    return None


def fujita_threshold(
    f: NonlinearitySpec,
    h: TimeWeightSpec,
    d: int,
    sigma: float,
    sweep: str = "p",
    bracket: tuple[float, float] = (1.001, 8.0),
    width: float = 0.02,
    epsilon: float = 0.5,
    k_max: int = 40,
    scan_points: int = 24,
) -> FujitaReport:
    """Threshold in the sweep exponent separating Diverges (below) from Converges (above).

    Bisection runs on :func:`classify_numeric` with a zero dead band so that
    every probe is decisive.
    """
    if sweep not in {fl.name for fl in dataclasses.fields(f)}:
        raise DomainError(f"{type(f).__name__} has no exponent {sweep!r}")

    def status_at(x: float) -> Status:
        spec = dataclasses.replace(f, **{sweep: float(x), "diagnostic": True})
        prob = CriterionProblem(d, sigma, spec, h, epsilon)
        return classify_numeric(prob, k_max=k_max, margin_tol=0.0).status

    lo, hi = bracket
    xs = np.linspace(lo, hi, scan_points)
    st = [status_at(x) for x in xs]
    flips = [i for i in range(len(st) - 1) if st[i] != st[i + 1]]
    closed = closed_form_threshold(f, h, d, sigma) if sweep == "p" else None
    stated = stated_combined_threshold(h, d, sigma) if isinstance(f, PowerSum) and sweep == "p" else None
    label = getattr(f, "label", type(f).__name__) + " / " + type(h).__name__

    numeric = None
    note = ""
    if len(flips) > 1 or (flips and not (st[flips[0]] == Status.DIVERGES and st[flips[0] + 1] == Status.CONVERGES)):
        evidence = ", ".join(f"{x:.4g}:{s}" for x, s in zip(xs, st))
        raise InconsistencyError(f"classification is not monotone in {sweep}: {evidence}")
    if not flips:
        note = f"no threshold in [{lo:g}, {hi:g}]: verdict {st[0]} throughout"
    else:
        a, b = float(xs[flips[0]]), float(xs[flips[0] + 1])
        while b - a > width / 2:
            mid = 0.5 * (a + b)
            if status_at(mid) == Status.DIVERGES:
                a = mid
            else:
                b = mid
        numeric = float(0.5 * (a + b))

    if closed is not None:
        gap = None if numeric is None else abs(closed - numeric)
        return FujitaReport(label, closed, "closed_form", closed, numeric, gap, stated, note)
    p_F = math.nan if numeric is None else numeric
    return FujitaReport(label, p_F, "bisection_on_numeric", None, numeric, None, stated, note)


# --------------------------------------------------------------------------
# condition (i)


@dataclass(frozen=True)
class ConditionIResult:
    value: float  # integral over [0, t_max]
    tail_exponent: float  # free-fit log-log slope of the sup norm over the last decade
    fitted_constant: float  # c in sup ~ c t^{-d/(2 sigma)}
    tail_value: float  # model integral over [t_max, inf); inf unless Converges
    status: Status
    curve: DecayCurve
    note: str = ""

    @property
    def total(self) -> float:
        return self.value + self.tail_value


def _model_tail(problem: CriterionProblem, c: float, t0: float, k_max: int = 40):
    """Panels of ``h(t) f(c t^-k) / (c t^-k)`` over ``[t0 2^j, t0 2^{j+1}]``."""
    k, f, h = problem.k, problem.f, problem.h

    def log_g(t):
        m = c * t ** (-k)
        return h.log(t) + f.log(m) - np.log(m)

    edges = t0 * 2.0 ** np.arange(k_max + 2)
    return log_panel_integrals(log_g, edges)


def condition_i_integral(
    u0: GridField,
    problem: CriterionProblem,
    t_max: float,
    times_per_decade: int = 10,
    t_min: float = 1e-3,
    exponent_tol: float = 0.25,
    wrap_tol: float | None = 1e-2,
) -> ConditionIResult:
    """``int_0^inf h(t) f(||S(t) u0||) / ||S(t) u0|| dt`` with a fitted power-law tail.

    The integrand is integrated along a log-spaced time grid up to ``t_max``.
    The sup norm over the last decade is fit to ``c t^{-d/(2 sigma)}``; if
    its free slope departs from ``-d/(2 sigma)`` by more than ``exponent_tol``
    the run has not reached the asymptotic regime and the verdict is
    Undetermined.
    """
    if not t_max > 10 * t_min:
        raise DomainError("t_max must exceed 10 * t_min")
    if problem.d != u0.grid.d:
        raise DomainError("problem and initial data dimensions differ")
    n = int(round(times_per_decade * math.log10(t_max / t_min))) + 1
    times = np.geomspace(t_min, t_max, n)
    curve = supnorm_decay_curve(u0, problem.sigma, times, wrap_tol=wrap_tol)
    tt = np.concatenate([[0.0], times])
    m = np.concatenate([[u0.sup_norm], curve.sup_norm])
    g = problem.h(tt) * problem.f(m) / m
    value = float(np.trapezoid(g, tt))

    sel = times >= t_max / 10.0
    if sel.sum() < 3:
        raise FitError("too few samples in the last decade; raise times_per_decade")
    free = fit_line(np.log(times[sel]), np.log(curve.sup_norm[sel])).slope
    k = problem.k
    c = float(np.exp(np.mean(np.log(curve.sup_norm[sel]) + k * np.log(times[sel]))))

    note = ""
    if abs(-free - k) > exponent_tol:
        status = Status.UNDETERMINED
        note = f"sup-norm slope {free:.3f} not within {exponent_tol} of {-k:.3f}"
    elif isinstance(problem.f, BUILTIN_F):
        status = classify_analytic(problem).status
    else:
        status = _classify_log_panels(_model_tail(problem, c, t_max), MARGIN_TOL, "numeric").status

    tail_value = math.inf
    if status == Status.CONVERGES:
        log_I = _model_tail(problem, c, t_max)
        finite = log_I[np.isfinite(log_I)]
        tail_value = float(np.exp(finite).sum()) if finite.size else 0.0
        if finite.size == log_I.size and not isinstance(problem.h, ExpT):
            slope = fit_line(np.arange(3), log_I[-3:] / math.log(2.0)).slope
            tail_value += geometric_tail(log_I[-1], slope)
    return ConditionIResult(value, free, c, tail_value, status, curve, note)


# --------------------------------------------------------------------------
# gamma / Phi machinery


def _gamma_panels(problem: CriterionProblem, a: float, b: float) -> np.ndarray:
    """Edges subdividing [a, b] geometrically, refined for exponential weights."""
    n_geo = max(1, math.ceil(math.log2(b / a)))
    edges = np.geomspace(a, b, n_geo + 1)
    rate = abs(getattr(problem.h, "exp_rate", 0.0))
    if rate > 0:
        refined = [edges[0]]
        for lo, hi in zip(edges[:-1], edges[1:]):
            m = max(1, math.ceil((hi - lo) * rate))
            refined.extend(np.linspace(lo, hi, m + 1)[1:])
        edges = np.asarray(refined)
    return edges


def _gamma_segment(problem: CriterionProblem, a: float, b: float) -> float:
    if b <= a:
        return 0.0
    log_I = log_panel_integrals(lambda t: log_integrand(problem, t), _gamma_panels(problem, a, b))
    with np.errstate(over="ignore"):
        total = float(np.exp(log_I).sum())
    return 2.0 ** (-problem.k) * problem.epsilon * total


def gamma_fn(problem: CriterionProblem, t: float) -> float:
    """``gamma(t) = 2^{-k} eps int_1^t h(s) s^k f(eps s^{-k}) ds``."""
    if not t >= 1:
        raise DomainError(f"gamma is defined for t >= 1, got {t}")
    return _gamma_segment(problem, 1.0, float(t))


def blowup_time_upper_bound(problem: CriterionProblem, eps1: float) -> float:
    """Root ``tau`` of ``gamma(tau) = Phi(eps1)``; ``inf`` when the criterion integral converges.

    ``eps1`` is the lower level of the data near the origin (after the
    normalisation by the kernel lower-bound constant), supplied by the caller.
    """
    if not 0 < problem.epsilon < 1:
        raise DomainError("the Phi/gamma construction needs 0 < epsilon < 1")
    if not eps1 > 0:
        raise DomainError(f"eps1 must be positive, got {eps1}")
    report = check_conditions_1_5(problem.f)
    if not report.condition_1_5_holds:
        raise CriterionInapplicableError(f"structural conditions on f_m/f_M fail for {problem.f!r}")
    target = phi(problem.f, problem.epsilon, eps1)
    if isinstance(problem.f, BUILTIN_F):
        status = classify_analytic(problem).status
    else:
        status = classify_numeric(problem).status
    if status != Status.DIVERGES:
        return math.inf
    acc, a = 0.0, 1.0
    while a < 1e300:
        b = 2.0 * a
        inc = _gamma_segment(problem, a, b)
        if acc + inc >= target:
            return brentq(lambda tau: acc + _gamma_segment(problem, a, tau) - target, a, b, xtol=1e-13 * a, rtol=1e-15)
        acc += inc
        a = b
    return math.inf
