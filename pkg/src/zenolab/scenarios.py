"""Turn an :class:`ExperimentConfig` into operators, run it, emit flat rows."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .counterexample import scalar_zeno_trajectory, v_asymptotic, v_of_t
from .diagnostics import (
    SweepConfig,
    WeightFunction,
    convergence_sweep,
    identity_battery,
    resolvent_convergence_probe,
    run_battery,
)
from .errors import ConfigInvalidError, NumericalFailureError
from .operators import (
    RNG_ALGORITHM,
    build_discrete_laplacian,
    build_indicator_projection,
    build_random_hermitian,
    build_random_projection,
    constant_family,
    interval_grid,
    random_state,
    rotating_rank_one_family,
    sliding_window_family,
    square_grid,
)
from .zeno import TimeGrid, ZenoScheme, default_time_samples

CSV_COLUMNS = ("scenario", "scheme_shape", "sampling", "epsilon", "n", "T", "M", "metric", "value",
               "config_hash")


@dataclass(frozen=True)
class ResultRecord:
    scenario: str
    scheme_shape: str
    sampling: str
    epsilon: str
    n: str
    T: str
    M: str
    metric: str
    value: float
    config_hash: str

    def key(self) -> tuple:
        return (self.config_hash, self.scheme_shape, self.sampling, self.epsilon, self.n, self.metric)

    def golden_key(self) -> str:
        if self.scheme_shape:
            return f"{self.scheme_shape}/{self.sampling}/{self.epsilon}/{self.n}/{self.metric}"
        return self.metric

    def as_csv(self) -> list:
        return [self.scenario, self.scheme_shape, self.sampling, self.epsilon, self.n, self.T, self.M,
                self.metric, format_float(self.value), self.config_hash]


def format_float(x: float) -> str:
    return format(float(x), ".17g")


@dataclass
class Instance:
    h: object
    family: object
    f: np.ndarray
    grid_spec: object = None


def _gaussian_state(spec, center, width) -> np.ndarray:
    x = spec.coordinates()
    if spec.dimension == 1:
        f = np.exp(-((x - center[0]) / width) ** 2)
    else:
        if len(center) != 2:
            raise ConfigInvalidError("state.center needs two coordinates in 2D")
        xx, yy = np.meshgrid(x, x, indexing="ij")
        f = np.exp(-(((xx - center[0]) ** 2 + (yy - center[1]) ** 2) / width**2)).reshape(-1)
    return f / np.linalg.norm(f)


def build_instance(cfg: ExperimentConfig) -> Instance:
    sc = cfg.scenario
    spec = None
    if sc in ("dirichlet-1d", "dirichlet-2d"):
        box = tuple(cfg["grid.box"])
        om = cfg["grid.omega"]
        if sc == "dirichlet-1d":
            if len(om) != 2:
                raise ConfigInvalidError("dirichlet-1d needs grid.omega = a, b")
            spec = interval_grid(cfg["grid.points"], (om[0], om[1]), box)
        else:
            if len(om) != 4:
                raise ConfigInvalidError("dirichlet-2d needs grid.omega = x0, x1, y0, y1")
            spec = square_grid(cfg["grid.points"],
                               lambda x, y: (x > om[0]) & (x < om[1]) & (y > om[2]) & (y < om[3]), box)
        h = build_discrete_laplacian(spec)
        p = build_indicator_projection(spec)
        if cfg["state.kind"] == "gaussian":
            f = _gaussian_state(spec, cfg["state.center"], cfg["state.width"])
        else:
            f = random_state(cfg["state.seed"], spec.size)
        kind = cfg["family.kind"]
        if kind == "sliding_window":
            fam = sliding_window_family(spec, cfg["family.speed"], cfg["family.tau_max"])
        elif kind == "constant":
            fam = constant_family(p)
        else:
            raise ConfigInvalidError(f"family.kind {kind!r} is not available on grids")
        return Instance(h, fam, f, spec)

    dim = cfg["operator.dim"]
    spectrum = cfg["operator.spectrum"] or ("uniform", cfg["operator.lambda_max"])
    h = build_random_hermitian(cfg["operator.seed"], dim, spectrum)
    f = random_state(cfg["state.seed"], dim)
    kind = cfg["family.kind"]
    if sc == "rotating-projection" or kind == "rotating_rank_one":
        psi0 = random_state(cfg["family.seed"], dim)
        direction = random_state(cfg["family.seed"] + 1, dim)
        fam = rotating_rank_one_family(psi0, direction, cfg["family.rate"], cfg["family.tau_max"])
    elif kind == "constant":
        fam = constant_family(build_random_projection(cfg["operator.seed"] + 1, dim, cfg["operator.rank"]))
    else:
        raise ConfigInvalidError(f"family.kind {kind!r} needs a grid scenario")
    return Instance(h, fam, f)


def time_grid(cfg: ExperimentConfig, h) -> TimeGrid:
    T = cfg["time.T"]
    m = cfg["time.M"]
    return TimeGrid(T, default_time_samples(h.norm2, T) if m == "auto" else m)


def _record(cfg, metric, value, shape="", sampling="", eps="", n="", T="", M="") -> ResultRecord:
    return ResultRecord(cfg.scenario, shape, sampling, str(eps), str(n), str(T), str(M), metric, float(value),
                        cfg.config_hash)


def _weight(cfg, grid):
    if cfg["weight.kind"] == "gaussian":
        return WeightFunction.truncated_gaussian(cfg["weight.center"], cfg["weight.width"], 0.0, grid.T)
    return WeightFunction.uniform(grid.T)


def sweep_rows(cfg: ExperimentConfig, n_values=None, inst: Instance | None = None) -> tuple[list, dict]:
    """Convergence sweep rows for the grid and random scenarios."""
    if cfg.scenario not in ("dirichlet-1d", "dirichlet-2d", "random", "rotating-projection"):
        raise ConfigInvalidError(f"scenario {cfg.scenario!r} has no n-sweep")
    inst = inst or build_instance(cfg)
    grid = time_grid(cfg, inst.h)
    schemes = [ZenoScheme(s, cfg["sweep.sampling"], e) for e in cfg["sweep.epsilon"] for s in cfg["sweep.shapes"]]
    n_values = cfg["sweep.n"] if n_values is None else n_values
    report = convergence_sweep(SweepConfig(inst.h, inst.family, inst.f, grid, n_values, schemes,
                                           _weight(cfg, grid), {"config_hash": cfg.config_hash}))
    rows = []
    for r in report.rows:
        for metric in ("sup_error", "l2loc_error", "phi_averaged_error"):
            rows.append(_record(cfg, metric, getattr(r.metrics, metric), r.scheme.shape.value,
                                r.scheme.sampling.value, r.scheme.epsilon, r.n, format_float(grid.T), grid.M))
    mono = {"/".join(map(str, k)): v for k, v in report.monotonicity.items()}
    return rows, {"monotonicity": mono, "metadata": report.metadata}


def dirichlet_block_residual(inst: Instance) -> float:
    """``||(PHP)|_Omega - L_Omega||_F / ||H||_F`` with L_Omega the stencil on the Omega grid."""
    spec = inst.grid_spec
    mask = spec.flat_mask
    php = inst.family.base.matrix @ inst.h.matrix @ inst.family.base.matrix
    block = php[np.ix_(mask, mask)]
    h2 = spec.spacing**2
    if spec.dimension == 1:
        m = int(mask.sum())
        ref = (2 * np.eye(m) - np.eye(m, k=1) - np.eye(m, k=-1)) / h2
    else:
        idx = np.argwhere(np.asarray(spec.mask))
        pos = {tuple(ij): k for k, ij in enumerate(idx)}
        ref = np.zeros((len(idx), len(idx)))
        for k, (i, j) in enumerate(idx):
            ref[k, k] = 4 / h2
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                q = pos.get((i + di, j + dj))
                if q is not None:
                    ref[k, q] = -1 / h2
    return float(np.linalg.norm(block - ref) / np.linalg.norm(inst.h.matrix))


def run_scenario(cfg: ExperimentConfig) -> tuple[list, dict]:
    """Run the configured scenario; returns ResultRecords and summary extras.

    Raises NumericalFailureError (after computing everything) when an exact
    identity or inequality is violated beyond its tolerance.
    """
    sc = cfg.scenario
    extras: dict = {"rng": RNG_ALGORITHM}
    if sc in ("dirichlet-1d", "dirichlet-2d", "random", "rotating-projection"):
        inst = build_instance(cfg)
        rows, more = sweep_rows(cfg, inst=inst)
        extras.update(more)
        if sc.startswith("dirichlet"):
            rows.append(_record(cfg, "dirichlet_block_residual", dirichlet_block_residual(inst)))
        if cfg["probe.enabled"]:
            taus = [2.0**-k for k in sorted(cfg["probe.tau_exponents"])]
            table = resolvent_convergence_probe(inst.h, inst.family, cfg["probe.t"], taus, inst.f,
                                                cfg["probe.real_zeta"])
            for label, col in table.columns.items():
                for k, val in zip(sorted(cfg["probe.tau_exponents"]), col):
                    rows.append(_record(cfg, f"resolvent[{label},tau=2^-{k}]", val))
            extras["probe_decreasing"] = table.decreasing()
        return rows, extras
    if sc == "counterexample":
        return counterexample_rows(cfg, extras)
    return battery_rows(cfg, extras)


def counterexample_rows(cfg: ExperimentConfig, extras: dict) -> tuple[list, dict]:
    rel = cfg["counterexample.rel_tol"]
    ts = np.linspace(0.0, 10.0, 201)
    re_err = max(abs(v_of_t(t, rel).real - np.exp(-t)) / np.exp(-t) for t in ts)
    v01 = v_of_t(0.01, rel)
    asym_gap = abs(v01.imag - v_asymptotic(0.01).imag) / abs(v01.imag)
    traj = scalar_zeno_trajectory(cfg["counterexample.t"], cfg["counterexample.nu_min"],
                                  cfg["counterexample.nu_max"], cfg["counterexample.samples_per_decade"], rel)
    rows = [
        _record(cfg, "re_v_max_rel_error", re_err),
        _record(cfg, "asymptote_imag_rel_gap", asym_gap),
        _record(cfg, "phase_winding", traj.winding),
        _record(cfg, "modulus_min", traj.modulus.min()),
        _record(cfg, "modulus_max", traj.modulus.max()),
    ]
    extras["trajectory"] = traj
    return rows, extras


BATTERY_METRICS = ("identity_residual", "chernoff_excess", "sine_residual", "phi_consistency",
                   "shift_residual", "hp_shift_residual", "sign_residual")


def battery_rows(cfg: ExperimentConfig, extras: dict) -> tuple[list, dict]:
    insts = identity_battery(cfg["battery.count"], cfg["battery.seed"],
                             (cfg["battery.dim_min"], cfg["battery.dim_max"]), cfg["battery.n_max"])
    results = run_battery(insts)
    rows = []
    worst = dict.fromkeys(BATTERY_METRICS, -np.inf)
    for inst, r in zip(insts, results):
        vals = {
            "identity_residual": r.identity_residual,
            "chernoff_excess": r.chernoff_lhs - r.chernoff_rhs,
            "sine_residual": r.sine_residual,
            "phi_consistency": r.phi_consistency,
            "shift_residual": r.shift_residual,
            "hp_shift_residual": r.hp_shift_residual,
        }
        if r.sign_residual is not None:
            vals["sign_residual"] = r.sign_residual
        for metric, val in vals.items():
            worst[metric] = max(worst[metric], val)
            rows.append(_record(cfg, f"{metric}[{inst.index}]", val, n=inst.n, T=format_float(inst.t)))
    limits = {
        "identity_residual": cfg["tol.identity"],
        "chernoff_excess": cfg["tol.chernoff"],
        "sine_residual": cfg["tol.sine"],
        "phi_consistency": 1e-8,
        "shift_residual": cfg["tol.invariant"],
        "hp_shift_residual": 1e-9,
        "sign_residual": cfg["tol.invariant"],
    }
    extras["battery_worst"] = worst
    extras["battery_limits"] = limits
    failed = [m for m in BATTERY_METRICS if worst[m] > limits[m]]
    extras["battery_failed"] = failed
    return rows, extras


def check_battery(extras: dict) -> None:
    if extras.get("battery_failed"):
        raise NumericalFailureError(f"battery tolerances exceeded: {extras['battery_failed']}")

