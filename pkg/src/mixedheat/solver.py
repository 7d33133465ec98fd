"""Time integration of ``u_t + L u = h(t) f(u)`` and the monotone Picard scheme.

The integrator is exponential Euler on the Duhamel form,
``u+ = exp(-dt L) [u + dt h(t) f(u)]``: the linear part is exact, the
source explicit.  Blow-up is declared only when the sup norm passes
``blowup_threshold`` and a straight-line fit of ``1 / sup`` over the final
samples decreases towards a root at or after the last sample.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .criterion import CriterionProblem, Status, condition_i_integral
from .errors import (
    CapacityError,
    DomainError,
    HypothesisViolationError,
    ResolutionError,
    StalledError,
)
from .grid import GridField, GridSpec, fmt, gaussian_bump, read_array_file, smooth_plateau
from .kernel import WRAP_TOL, check_aliasing, check_wraparound, real_symbol
from .nonlinearity import NonlinearitySpec, TimeWeightSpec, lipschitz_slope
from .quadrature import LineFit, fit_line

NONNEG_SLACK = 1e-9
EXTRAPOLATION_SAMPLES = 10
PICARD_MONOTONE_SLACK = 1e-10
PICARD_BOUND_SLACK = 1e-8


# --------------------------------------------------------------------------
# initial data recipes


@dataclass(frozen=True)
class GaussianData:
    amplitude: float
    width: float = 1.0
    center: tuple[float, ...] | None = None

    def __post_init__(self):
        if not (self.amplitude > 0 and self.width > 0):
            raise DomainError("Gaussian data needs amplitude > 0 and width > 0 (u0 must not vanish)")

    def build(self, grid: GridSpec) -> GridField:
        return gaussian_bump(grid, self.amplitude, self.width, self.center)

    @property
    def peak(self) -> float:
        return self.amplitude


@dataclass(frozen=True)
class PlateauData:
    amplitude: float
    radius: float
    edge: float = 0.5
    center: tuple[float, ...] | None = None

    def __post_init__(self):
        if not (self.amplitude > 0 and self.radius > 0 and self.edge > 0):
            raise DomainError("plateau data needs positive amplitude, radius and edge")

    def build(self, grid: GridSpec) -> GridField:
        return smooth_plateau(grid, self.amplitude, self.radius, self.edge, self.center)

    @property
    def peak(self) -> float:
        return self.amplitude


@dataclass(frozen=True)
class FileData:
    path: str

    def build(self, grid: GridSpec) -> GridField:
        u, _, _ = read_array_file(self.path)
        if u.grid != grid:
            raise DomainError(f"{self.path}: stored grid {u.grid} differs from configured grid {grid}")
        return u

    @property
    def peak(self) -> float:
        return math.nan


InitialData = GaussianData | PlateauData | FileData


@dataclass(frozen=True)
class EvolutionConfig:
    grid: GridSpec
    sigma: float
    f: NonlinearitySpec
    h: TimeWeightSpec
    u0: InitialData
    T: float
    dt_init: float = 1e-2
    dt_min: float = 1e-24
    safety: float = 0.2
    blowup_threshold: float = 1e8
    decay_fraction: float = 1e-2
    wrap_tol: float | None = WRAP_TOL

    def __post_init__(self):
        if not 0 < self.sigma < 1:
            raise DomainError(f"sigma must lie in (0, 1), got {self.sigma}")
        if not self.T > 0:
            raise DomainError(f"horizon T must be positive, got {self.T}")
        if not 0 < self.dt_min < self.dt_init:
            raise DomainError("need 0 < dt_min < dt_init")
        if not 0 < self.safety < 1:
            raise DomainError(f"safety must lie in (0, 1), got {self.safety}")
        if not 0 < self.decay_fraction < 1:
            raise DomainError("decay_fraction must lie in (0, 1)")
        if self.u0.peak >= self.blowup_threshold:
            raise DomainError("blowup_threshold must exceed the initial sup norm")

    def initial_field(self) -> GridField:
        u0 = self.u0.build(self.grid)
        if u0.min_value < 0 or u0.sup_norm == 0:
            raise DomainError("initial data must be nonnegative and not identically zero")
        if u0.sup_norm >= self.blowup_threshold:
            raise DomainError("blowup_threshold must exceed the initial sup norm")
        return u0


# --------------------------------------------------------------------------
# stepping


def _propagate(grid: GridSpec, sigma: float, values: np.ndarray, dt: float) -> np.ndarray:
    spec = np.fft.rfftn(values) * np.exp(-dt * real_symbol(grid, sigma))
    return np.fft.irfftn(spec, s=grid.shape, axes=tuple(range(grid.d)))


def step_exponential_euler(u: GridField, t: float, dt: float, config: EvolutionConfig) -> GridField:
    """``exp(-dt L) [u + dt h(t) f(u)]``.

    Raises ``FloatingPointError`` when the step produces non-finite values.
    """
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    vals = u.values
    with np.errstate(over="ignore", invalid="ignore"):
        src = float(config.h(t)) * np.asarray(config.f(np.maximum(vals, 0.0)))
        pre = vals + dt * src
    if not np.all(np.isfinite(pre)):
        raise FloatingPointError("non-finite source term")
    out = _propagate(u.grid, config.sigma, pre, dt)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite values after propagation")
    check_wraparound(u.grid, out, config.wrap_tol, what="evolved field")
    return GridField(u.grid, out)


# --------------------------------------------------------------------------
# evolution


class Outcome(str, Enum):
    DECAYED = "Decayed"
    BLOWUP = "BlowUp"
    HORIZON = "HorizonReached"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class EvolutionTrace:
    times: np.ndarray
    sup_norm: np.ndarray
    l1_mass: np.ndarray
    dt_used: np.ndarray  # step that produced each sample; 0 for the initial sample
    status: Outcome
    t_estimate: float | None = None
    blowup_extrapolation: LineFit | None = None
    note: str = ""
    final: GridField | None = field(default=None, repr=False)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "sup_norm", "l1_mass", "dt"])
            for row in zip(self.times, self.sup_norm, self.l1_mass, self.dt_used):
                w.writerow([fmt(v) for v in row])

    def metadata(self) -> dict:
        fit = self.blowup_extrapolation
        return {
            "status": str(self.status),
            "t_estimate": self.t_estimate,
            "blowup_extrapolation": None if fit is None else {"slope": fit.slope, "intercept": fit.intercept, "residual": fit.residual},
            "steps": int(self.times.size - 1),
            "final_time": float(self.times[-1]),
            "final_sup_norm": float(self.sup_norm[-1]),
            "note": self.note,
        }


def _blowup_fit(times: np.ndarray, sup: np.ndarray, dts: np.ndarray):
    """Fit ``1 / sup`` against time over the last samples; returns ``(fit, t_root)``.

    Times are rebuilt from the step sizes relative to the first fitted sample,
    since near blow-up steps are far below the resolution of the absolute time.
    """
    k = EXTRAPOLATION_SAMPLES
    if sup.size < k:
        return None, None
    offsets = np.concatenate([[0.0], np.cumsum(dts[-k + 1 :])])
    fit = fit_line(offsets, 1.0 / sup[-k:])
    if not fit.slope < 0:
        return fit, None
    root = -fit.intercept / fit.slope
    return fit, float(times[-k] + root) if root >= offsets[-1] else None


def evolve(config: EvolutionConfig, max_steps: int = 2_000_000) -> EvolutionTrace:
    u = config.initial_field()
    sup0 = u.sup_norm
    t = 0.0
    times, sups, masses, dts = [0.0], [sup0], [u.l1_mass], [0.0]
    note = ""
    for _ in range(max_steps):
        sup = u.sup_norm
        if sup > config.blowup_threshold or t >= config.T:
            break
        rate = float(config.h(t)) * lipschitz_slope(config.f, sup)
        dt = config.dt_init if rate == 0 else min(config.dt_init, config.safety / rate)
        if dt < config.dt_min:
            raise StalledError(f"dt = {dt:.3g} < dt_min = {config.dt_min:g} at t = {t:.17g} with sup = {sup:.3g}")
        dt = min(dt, config.T - t)
        if t + dt == t:
            raise StalledError(f"time no longer advances at t = {t:.17g} (dt = {dt:.3g})")
        try:
            u_new = step_exponential_euler(u, t, dt, config)
        except FloatingPointError as exc:
            note = f"overflow at t = {t:.17g}: {exc}"
            break
        floor = -NONNEG_SLACK * max(1.0, u_new.sup_norm)
        if u_new.min_value < floor:
            raise ResolutionError(
                f"evolved field min {u_new.min_value:.3g} below {floor:.3g} at t = {t + dt:.17g}; grid under-resolves the solution"
            )
        u = u_new
        t = t + dt
        times.append(t)
        sups.append(u.sup_norm)
        masses.append(u.l1_mass)
        dts.append(dt)
    else:
        note = f"step budget {max_steps} exhausted"

    times_a, sup_a, mass_a, dt_a = (np.asarray(v) for v in (times, sups, masses, dts))
    if sup_a[-1] > config.blowup_threshold or note.startswith("overflow"):
        fit, root = _blowup_fit(times_a, sup_a, dt_a)
        if root is not None and sup_a[-1] > config.blowup_threshold:
            return EvolutionTrace(times_a, sup_a, mass_a, dt_a, Outcome.BLOWUP, root, fit, note, u)
        note = (note + "; " if note else "") + "threshold passed without a consistent 1/sup extrapolation"
        return EvolutionTrace(times_a, sup_a, mass_a, dt_a, Outcome.HORIZON, None, fit, note, u)

    tail = sup_a[-min(EXTRAPOLATION_SAMPLES, sup_a.size) :]
    if sup_a[-1] < config.decay_fraction * sup0 and np.all(np.diff(tail) <= 0):
        return EvolutionTrace(times_a, sup_a, mass_a, dt_a, Outcome.DECAYED, None, None, note, u)
    return EvolutionTrace(times_a, sup_a, mass_a, dt_a, Outcome.HORIZON, None, None, note, u)


# --------------------------------------------------------------------------
# Picard iteration


@dataclass(frozen=True)
class PicardResult:
    K: float
    mu: float
    t_samples: np.ndarray
    iterate_sup_curves: np.ndarray  # (J + 1, len(t_samples))
    difference_sups: np.ndarray  # ||y_j - y_{j-1}||_sup over all samples, j = 1..J
    max_bound_excess: float  # max of y_j - (1 + K) S(t) u0 over iterates and samples
    max_monotone_violation: float  # max of y_{j-1} - y_j
    bound_satisfied: bool
    monotone: bool

    def to_record(self) -> dict:
        return {
            "K": self.K,
            "mu": self.mu,
            "t_samples": self.t_samples.tolist(),
            "iterate_sup_curves": self.iterate_sup_curves.tolist(),
            "difference_sups": self.difference_sups.tolist(),
            "max_bound_excess": self.max_bound_excess,
            "max_monotone_violation": self.max_monotone_violation,
            "bound_satisfied": self.bound_satisfied,
            "monotone": self.monotone,
        }


def picard_iterate(
    config: EvolutionConfig,
    J: int,
    t_samples=None,
    memory_cap_bytes: int = 2**30,
    k_times_per_decade: int = 10,
) -> PicardResult:
    """Iterates ``y_0 = S(t) u0``, ``y_j = S(t) u0 + int_0^t h(s) S(t - s) f(y_{j-1}(s)) ds``.

    ``config.u0`` is the shape ``phi``; the data is ``u0 = mu phi`` with
    ``mu`` halved from 1 until ``sqrt(mu) max_t ||S(t) phi||_sup < 1``.  The
    Duhamel integral is the trapezoid rule on the sample times.  ``K`` is the
    condition-(i) integral of ``phi`` on ``[0, T]`` plus its fitted tail.
    """
    if J < 0:
        raise DomainError(f"J must be nonnegative, got {J}")
    grid = config.grid
    if t_samples is None:
        t_samples = np.concatenate([[0.0], np.geomspace(1.0, config.T, 19)])
    ts = np.asarray(sorted(set(float(x) for x in t_samples)), dtype=float)
    if ts[0] < 0 or ts[-1] > config.T:
        raise DomainError("t_samples must lie in [0, T]")
    if ts[0] > 0:
        ts = np.concatenate([[0.0], ts])
    if ts.size > 1:
        # the discrete propagator is order preserving only when resolved on the grid
        check_aliasing(grid, config.sigma, float(np.min(np.diff(ts))))
    need = (J + 1) * ts.size * int(np.prod(grid.shape)) * 8
    if need > memory_cap_bytes:
        raise CapacityError(f"storing {J + 1} iterates needs {need} bytes > cap {memory_cap_bytes}")

    phi = config.initial_field()
    problem = CriterionProblem(grid.d, config.sigma, config.f, config.h)
    ci = condition_i_integral(phi, problem, config.T, times_per_decade=k_times_per_decade, wrap_tol=config.wrap_tol)
    if ci.status != Status.CONVERGES:
        raise HypothesisViolationError(f"condition-(i) integral is not finite for this data (verdict {ci.status}) {ci.note}")
    K = ci.total

    sym = real_symbol(grid, config.sigma)
    phi_hat = np.fft.rfftn(phi.values)
    s_phi = np.stack([np.fft.irfftn(phi_hat * np.exp(-t * sym), s=grid.shape, axes=tuple(range(grid.d))) for t in ts])
    peak = float(np.max(np.abs(s_phi)))
    mu = 1.0
    while math.sqrt(mu) * peak >= 1.0:
        mu *= 0.5
    base = mu * s_phi

    hs = np.asarray(config.h(ts), dtype=float)
    iterates = np.empty((J + 1, *base.shape))
    iterates[0] = base
    for j in range(1, J + 1):
        src_hat = np.stack([hs[l] * np.fft.rfftn(config.f(np.maximum(iterates[j - 1][l], 0.0))) for l in range(ts.size)])
        nxt = base.copy()
        for i in range(1, ts.size):
            acc = np.zeros_like(src_hat[0])
            for l in range(i):
                w = 0.5 * (ts[l + 1] - ts[l])
                acc += w * (np.exp(-(ts[i] - ts[l]) * sym) * src_hat[l] + np.exp(-(ts[i] - ts[l + 1]) * sym) * src_hat[l + 1])
            nxt[i] += np.fft.irfftn(acc, s=grid.shape, axes=tuple(range(grid.d)))
        iterates[j] = nxt

    sups = np.max(np.abs(iterates), axis=tuple(range(2, iterates.ndim)))
    diffs = np.array([float(np.max(np.abs(iterates[j] - iterates[j - 1]))) for j in range(1, J + 1)])
    excess = float(np.max(iterates - (1.0 + K) * base[None]))
    viol = max((float(np.max(iterates[j - 1] - iterates[j])) for j in range(1, J + 1)), default=-math.inf)
    return PicardResult(
        K=K,
        mu=mu,
        t_samples=ts,
        iterate_sup_curves=sups,
        difference_sups=diffs,
        max_bound_excess=excess,
        max_monotone_violation=viol,
        bound_satisfied=excess <= PICARD_BOUND_SLACK,
        monotone=viol <= PICARD_MONOTONE_SLACK,
    )


def write_trace(trace: EvolutionTrace, out_dir, config_echo: dict | None = None, wall_time: float | None = None) -> None:
    out = Path(out_dir)
    trace.to_csv(out / "trace.csv")
    meta = {"config": config_echo or {}, **trace.metadata(), "wall_time": wall_time}
    (out / "trace_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
