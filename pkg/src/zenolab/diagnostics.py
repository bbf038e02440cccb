"""Convergence metrics, n-sweeps and the seeded identity battery.

Three distances between a Zeno trace and its limit are reported: the
supremum over grid times, the time-integrated L2 seminorm on ``[0, T]``
(trapezoid rule) and a weighted average with a probability density phi
on the time axis.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import SupportMismatchError
from .reduced_evolution import (
    chernoff_gap,
    compute_F,
    nonsym_identity_residual,
    resolvent_limit,
    resolvent_S,
    sine_identity_residual,
)
from .linalg import HermitianOperator, OrthogonalProjection
from .operators import (
    RNG_ALGORITHM,
    ProjectionFamily,
    build_random_hermitian,
    build_random_projection,
    conjugated_family,
    constant_family,
    random_state,
)
from .zeno import (
    EvolutionTrace,
    Sampling,
    Shape,
    TimeGrid,
    ZenoScheme,
    compute_HP,
    reference_evolve,
    zeno_evolve,
)


def _trapezoid(y: np.ndarray, x: np.ndarray) -> float:
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def distances(a: EvolutionTrace, b: EvolutionTrace) -> np.ndarray:
    """Per-time ``||a(t) - b(t)||``; matrix states use the Frobenius norm."""
    a.check_compatible(b)
    diff = (a.states - b.states).reshape(a.states.shape[0], -1)
    return np.linalg.norm(diff, axis=1)


def sup_error(a: EvolutionTrace, b: EvolutionTrace) -> float:
    return float(np.max(distances(a, b)))


def l2loc_error(a: EvolutionTrace, b: EvolutionTrace, T: float | None = None) -> float:
    """``(int_0^T ||a(t) - b(t)||^2 dt)^(1/2)`` by the trapezoid rule.

    When T falls between grid points the squared distance is linearly
    interpolated at T.
    """
    d2 = distances(a, b) ** 2
    t = a.times
    if T is None or np.isclose(T, t[-1], rtol=1e-12, atol=0):
        return np.sqrt(_trapezoid(d2, t))
    if T > t[-1] or T <= 0:
        raise ValueError(f"T={T!r} outside (0, {t[-1]}]")
    k = int(np.searchsorted(t, T, side="right"))
    tt = np.append(t[:k], T)
    yy = np.append(d2[:k], np.interp(T, t, d2))
    return np.sqrt(_trapezoid(yy, tt))


@dataclass(frozen=True)
class WeightFunction:
    """Probability density on the time axis, compactly supported in ``[lo, hi]``.

    kind is ``uniform``, ``gaussian`` (truncated at ``cutoff`` widths) or
    ``tabulated`` (piecewise linear through ``table``).  Values on a time
    grid are renormalized so their trapezoid integral is exactly one.
    """

    kind: str
    lo: float
    hi: float
    center: float = 0.0
    width: float = 1.0
    table: tuple = ()

    @classmethod
    def uniform(cls, T: float, start: float = 0.0) -> "WeightFunction":
        return cls("uniform", start, T)

    @classmethod
    def truncated_gaussian(cls, center: float, width: float, lo: float = 0.0, hi: float = np.inf,
                           cutoff: float = 6.0) -> "WeightFunction":
        if width <= 0:
            raise ValueError("width must be positive")
        return cls("gaussian", max(lo, center - cutoff * width), min(hi, center + cutoff * width),
                   center, width)

    @classmethod
    def tabulated(cls, times, values) -> "WeightFunction":
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if np.any(values < 0):
            raise ValueError("weights must be nonnegative")
        return cls("tabulated", float(times[0]), float(times[-1]), table=(tuple(times), tuple(values)))

    def raw(self, t: np.ndarray) -> np.ndarray:
        inside = (t >= self.lo) & (t <= self.hi)
        if self.kind == "uniform":
            vals = np.ones_like(t)
        elif self.kind == "gaussian":
            vals = np.exp(-0.5 * ((t - self.center) / self.width) ** 2)
        elif self.kind == "tabulated":
            vals = np.interp(t, np.asarray(self.table[0]), np.asarray(self.table[1]))
        else:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        return np.where(inside, vals, 0.0)

    def on_grid(self, t: np.ndarray) -> np.ndarray:
        if self.lo < t[0] - 1e-12 or self.hi > t[-1] + 1e-12:
            raise SupportMismatchError(f"weight support [{self.lo}, {self.hi}] leaves the grid window "
                                       f"[{t[0]}, {t[-1]}]")
        vals = self.raw(t)
        mass = _trapezoid(vals, t)
        if mass <= 0:
            raise SupportMismatchError("weight has no mass on the grid")
        return vals / mass


def phi_averaged_error(a: EvolutionTrace, b: EvolutionTrace, phi: WeightFunction) -> float:
    """``int phi(t) ||a(t) - b(t)||^2 dt`` (trapezoid rule, phi normalized on the grid)."""
    d2 = distances(a, b) ** 2
    return _trapezoid(phi.on_grid(a.times) * d2, a.times)


@dataclass(frozen=True)
class ErrorMetrics:
    sup_error: float
    l2loc_error: float
    phi_averaged_error: float


def error_metrics(a: EvolutionTrace, b: EvolutionTrace, phi: WeightFunction | None = None) -> ErrorMetrics:
    phi = phi or WeightFunction.uniform(a.grid.T)
    return ErrorMetrics(sup_error(a, b), l2loc_error(a, b), phi_averaged_error(a, b, phi))


def worker_count() -> int:
    """Parallelism cap from ``ZENOLAB_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("ZENOLAB_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class SweepConfig:
    h: HermitianOperator
    family: ProjectionFamily
    f: np.ndarray
    grid: TimeGrid
    n_values: list
    schemes: list = field(default_factory=lambda: [ZenoScheme(s) for s in Shape])
    weight: WeightFunction | None = None
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SweepRow:
    n: int
    scheme: ZenoScheme
    metrics: ErrorMetrics


@dataclass
class ConvergenceReport:
    n_values: list
    rows: list
    metadata: dict
    monotonicity: dict

    def series(self, scheme: ZenoScheme, metric: str) -> np.ndarray:
        return np.array([getattr(r.metrics, metric) for r in self.rows if r.scheme == scheme])


def _strictly_decreasing(x) -> bool:
    x = np.asarray(x)
    return bool(np.all(np.diff(x) < 0))


def convergence_sweep(cfg: SweepConfig) -> ConvergenceReport:
    """Zeno traces vs. the limit ``exp(-i eps t H_P) P f`` for every n and scheme.

    Non-monotone error sequences are only flagged in ``monotonicity``.
    """
    n_values = sorted(set(int(n) for n in cfg.n_values))
    hp = compute_HP(cfg.h, cfg.family.base)
    refs = {eps: reference_evolve(hp, cfg.family.base, cfg.f, cfg.grid, eps)
            for eps in sorted({s.epsilon for s in cfg.schemes})}
    phi = cfg.weight or WeightFunction.uniform(cfg.grid.T)
    tasks = [(n, s) for s in cfg.schemes for n in n_values]

    def run(task):
        n, scheme = task
        trace = zeno_evolve(cfg.h, cfg.family, cfg.f, cfg.grid, n, scheme)
        return SweepRow(n, scheme, error_metrics(trace, refs[scheme.epsilon], phi))

    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(run, tasks))
    else:
        rows = [run(t) for t in tasks]
    mono = {}
    for s in cfg.schemes:
        sel = [r.metrics for r in rows if r.scheme == s]
        mono[(s.shape.value, s.sampling.value, s.epsilon)] = {
            m: _strictly_decreasing([getattr(x, m) for x in sel])
            for m in ("sup_error", "l2loc_error", "phi_averaged_error")}
    meta = dict(cfg.metadata)
    meta.update({"dim": cfg.h.dim, "rank": cfg.family.base.rank, "T": cfg.grid.T, "M": cfg.grid.M,
                 "family": cfg.family.kind, "rng": RNG_ALGORITHM})
    return ConvergenceReport(n_values, rows, meta, mono)


@dataclass(frozen=True)
class ProbeTable:
    taus: np.ndarray
    columns: dict

    def decreasing(self) -> dict:
        return {k: _strictly_decreasing(v) for k, v in self.columns.items()}


def resolvent_convergence_probe(h: HermitianOperator, fam: ProjectionFamily, t_list, tau_list, f,
                                real_zetas=(1.0,)) -> ProbeTable:
    """``||(I + S(zeta, tau))^{-1} f - (I + zeta H_P)^{-1} P f||`` over a tau sweep.

    Columns ``t=<t>`` use ``zeta = i t``; columns ``zeta=<x>`` use real zeta.
    """
    taus = np.asarray(tau_list, dtype=float)
    if np.any(np.diff(taus) >= 0):
        raise ValueError("tau_list must be strictly descending")
    f = np.asarray(f, dtype=complex)
    hp = compute_HP(h, fam.base)
    zetas = [(f"t={t:g}", 1j * t) for t in t_list] + [(f"zeta={z:g}", complex(z)) for z in real_zetas]
    cols = {}
    for label, z in zetas:
        target = resolvent_limit(hp, fam.base, z) @ f
        cols[label] = np.array([np.linalg.norm(resolvent_S(h, fam, z, tau) @ f - target) for tau in taus])
    return ProbeTable(taus, cols)


@dataclass(frozen=True)
class BatteryInstance:
    index: int
    h: HermitianOperator
    family: ProjectionFamily
    f: np.ndarray
    n: int
    t: float
    real: bool


def identity_battery(count: int = 500, seed: int = 20240607, dims=(4, 32), n_max: int = 256,
                     t_values=(0.1, 1.0, 3.0)) -> list:
    """Seeded instances: dims in range, ranks 1..dim, n in 1..n_max.

    Even-indexed instances are real-entried with a constant projection
    (so the sign symmetry applies); odd ones are complex, and two out of
    three odd ones use a conjugated projection family.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        dim = int(rng.integers(dims[0], dims[1] + 1))
        rank = int(rng.integers(1, dim + 1))
        n = int(rng.integers(1, n_max + 1))
        t = float(t_values[i % len(t_values)])
        lam_max = float(rng.uniform(1.0, 10.0))
        sub = int(rng.integers(2**31))
        real = i % 2 == 0
        h = build_random_hermitian(sub, dim, ("uniform", lam_max), real=real)
        p = build_random_projection(sub + 1, dim, rank, real=real)
        if real or i % 3 == 0:
            fam = constant_family(p)
        else:
            gen = build_random_hermitian(sub + 2, dim, ("uniform", 1.0))
            fam = conjugated_family(p, gen.matrix, tau_max=1.0)
        f = random_state(sub + 3, dim, real=real)
        out.append(BatteryInstance(i, h, fam, f, n, t, real))
    return out


@dataclass(frozen=True)
class BatteryResult:
    index: int
    identity_residual: float
    chernoff_lhs: float
    chernoff_rhs: float
    sine_residual: float
    phi_consistency: float
    shift_residual: float
    hp_shift_residual: float
    sign_residual: float | None


def run_battery_instance(inst: BatteryInstance, shifts=(-2.0, 3.0), grid: TimeGrid = TimeGrid(1.0, 33),
                         seed: int = 0) -> BatteryResult:
    h, fam, f, n, t = inst.h, inst.family, inst.f, inst.n, inst.t
    fnorm = np.linalg.norm(f)
    ident = nonsym_identity_residual(h, fam, t, n, f) / fnorm

    F = compute_F(h, fam, 1j * t, 1.0 / n)
    g = random_state(seed + inst.index, h.dim)
    lhs, rhs = chernoff_gap(F, g, n)

    w = random_state(seed + 7919 + inst.index, h.dim)
    sine = sine_identity_residual(h, t / n, w) / np.linalg.norm(w) ** 2

    scheme = ZenoScheme(Shape.SYMMETRIC, Sampling.CONSTANT, 1)
    trace = zeno_evolve(h, fam, f, grid, n, scheme)
    hp = compute_HP(h, fam.base)
    ref = reference_evolve(hp, fam.base, f, grid)
    l2 = l2loc_error(trace, ref)
    phi = phi_averaged_error(trace, ref, WeightFunction.uniform(grid.T))
    consistency = abs(phi - l2**2 / grid.T)

    shift_res = 0.0
    hp_res = 0.0
    pm = fam.base.matrix
    for c in shifts:
        shifted = zeno_evolve(h.shifted(c), fam, f, grid, n, scheme)
        phase = np.exp(-1j * c * grid.times)[:, None]
        shift_res = max(shift_res, float(np.max(np.abs(shifted.states - phase * trace.states))))
        hp_c = compute_HP(h.shifted(c), fam.base).matrix
        hp_res = max(hp_res, float(np.linalg.norm(pm @ (hp_c - hp.matrix - c * pm) @ pm)))

    sign_res = None
    if inst.real:
        minus = zeno_evolve(h, fam, f, grid, n, ZenoScheme(Shape.SYMMETRIC, Sampling.CONSTANT, -1))
        sign_res = float(np.max(np.abs(minus.states - trace.states.conj())))
    return BatteryResult(inst.index, ident, lhs, rhs, sine, consistency,
                         shift_res, hp_res, sign_res)


def run_battery(instances, shifts=(-2.0, 3.0)) -> list:
    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda i: run_battery_instance(i, shifts), instances))
    return [run_battery_instance(i, shifts) for i in instances]
