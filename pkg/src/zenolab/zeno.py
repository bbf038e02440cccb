"""Zeno product schemes, the Zeno generator and the reference evolution.

A scheme is one of the n-fold products

    symmetric        [P e^{-i eps t H/n} P]^n f
    left_projected   [P e^{-i eps t H/n}]^n f
    right_projected  [e^{-i eps t H/n} P]^n f

where P is the family value at 0 (constant sampling), at 1/n (tau-sampled)
or at t/n (time-scaled).  The n-th power is evaluated by binary
exponentiation of the step matrix compressed to the range of P: with an
orthonormal basis V of Ran P and K = V* U V,

    (PUP)^n = V K^n V*,   (PU)^n = V K^(n-1) V* U,   (UP)^n = U V K^(n-1) V*.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import BadNError, GridMismatchError, SamplingOutOfRangeError
from .linalg import CLAMP_TOL, HermitianOperator, OrthogonalProjection, operator_sqrt
from .operators import ProjectionFamily


class Shape(str, enum.Enum):
    SYMMETRIC = "symmetric"
    LEFT_PROJECTED = "left_projected"
    RIGHT_PROJECTED = "right_projected"


class Sampling(str, enum.Enum):
    CONSTANT = "constant"
    TAU_SAMPLED = "tau_sampled"
    TIME_SCALED = "time_scaled"


@dataclass(frozen=True)
class ZenoScheme:
    shape: Shape = Shape.SYMMETRIC
    sampling: Sampling = Sampling.CONSTANT
    epsilon: int = 1

    def __post_init__(self):
        object.__setattr__(self, "shape", Shape(self.shape))
        object.__setattr__(self, "sampling", Sampling(self.sampling))
        if self.epsilon not in (1, -1):
            raise ValueError(f"epsilon must be +1 or -1, got {self.epsilon!r}")


ALL_SHAPES = tuple(Shape)


@dataclass(frozen=True)
class TimeGrid:
    T: float
    M: int

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T!r}")
        if self.M < 2:
            raise ValueError(f"need at least 2 samples, got {self.M}")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.M)

    def refined(self) -> "TimeGrid":
        """Grid with every interval halved (M -> 2M - 1)."""
        return TimeGrid(self.T, 2 * self.M - 1)


def default_time_samples(norm: float, T: float, floor: int = 257, cap: int = 4096) -> int:
    """Samples needed to resolve oscillations at frequency ``norm`` over ``[0, T]``."""
    return int(min(cap, max(floor, np.ceil(32.0 * norm * T))))


@dataclass(frozen=True)
class EvolutionTrace:
    """States on a time grid: ``states[m]`` is the state at ``grid.times[m]``."""

    grid: TimeGrid
    states: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def norms(self) -> np.ndarray:
        flat = self.states.reshape(self.states.shape[0], -1)
        return np.linalg.norm(flat, axis=1)

    def check_compatible(self, other: "EvolutionTrace") -> None:
        if self.grid != other.grid or self.states.shape != other.states.shape:
            raise GridMismatchError(
                f"traces live on different grids: {self.grid} {self.states.shape} vs "
                f"{other.grid} {other.states.shape}")


def compute_HP(h: HermitianOperator, p: OrthogonalProjection) -> HermitianOperator:
    """Zeno generator ``(H^{1/2} P)* (H^{1/2} P)``.

    Operators bounded from below are shifted to be nonnegative first and
    the shift is added back on Ran P, so ``compute_HP(H + cI, P)`` equals
    ``compute_HP(H, P) + cP``.
    """
    floor = h.spectral_floor
    shift = floor if floor < -CLAMP_TOL * max(h.norm2, 1e-14) else 0.0
    root = operator_sqrt(h.shifted(-shift) if shift else h)
    x = root.matrix @ p.matrix
    hp = x.conj().T @ x + shift * p.matrix
    return HermitianOperator.from_matrix(hp, nonnegative=shift == 0.0)


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise BadNError(f"n must be a positive integer, got {n!r}")
    return int(n)


def _projection_for(fam: ProjectionFamily, scheme: ZenoScheme, n: int, t: float) -> OrthogonalProjection:
    if scheme.sampling is Sampling.CONSTANT:
        return fam.base
    tau = 1.0 / n if scheme.sampling is Sampling.TAU_SAMPLED else abs(t) / n
    return fam(tau)


def _check_sampling(fam: ProjectionFamily, scheme: ZenoScheme, n: int, grid: TimeGrid) -> None:
    if scheme.sampling is Sampling.TAU_SAMPLED and 1.0 / n > fam.tau_max:
        raise SamplingOutOfRangeError(f"1/n = {1.0 / n} exceeds tau_max = {fam.tau_max}")
    if scheme.sampling is Sampling.TIME_SCALED and grid.T / n > fam.tau_max:
        raise SamplingOutOfRangeError(f"T/n = {grid.T / n} exceeds tau_max = {fam.tau_max}")


def _power_apply(k: np.ndarray, m: int, y: np.ndarray) -> np.ndarray:
    """``k**m @ y`` for stacked matrices by binary exponentiation."""
    base = k
    while m:
        if m & 1:
            y = base @ y
        m >>= 1
        if m:
            base = base @ base
    return y


def _evolve_block(h: HermitianOperator, p: OrthogonalProjection, f2: np.ndarray, times: np.ndarray,
                  n: int, shape: Shape, epsilon: int) -> np.ndarray:
    w, lam = h.eigenvectors, h.eigenvalues
    v = p.basis
    a = v.conj().T @ w                      # (r, d)
    ph = np.exp(-1j * epsilon * np.outer(times, lam) / n)  # (b, d)
    k = (a[None, :, :] * ph[:, None, :]) @ a.conj().T       # (b, r, r)
    if shape is Shape.SYMMETRIC:
        y = np.broadcast_to(v.conj().T @ f2, (len(times),) + (v.shape[1], f2.shape[1]))
        return v @ _power_apply(k, n, y)
    if shape is Shape.LEFT_PROJECTED:
        z = a @ (ph[:, :, None] * (w.conj().T @ f2))
        return v @ _power_apply(k, n - 1, z)
    y = np.broadcast_to(v.conj().T @ f2, (len(times),) + (v.shape[1], f2.shape[1]))
    y = _power_apply(k, n - 1, y)
    return w @ (ph[:, :, None] * (a.conj().T @ y))


def zeno_evolve(h: HermitianOperator, fam: ProjectionFamily, f, grid: TimeGrid, n: int,
                scheme: ZenoScheme = ZenoScheme(), chunk_bytes: int = 1 << 26) -> EvolutionTrace:
    """Apply the n-fold Zeno product of ``scheme`` to ``f`` at every grid time.

    ``f`` may be a single state vector or a matrix of column states.
    """
    n = _check_n(n)
    _check_sampling(fam, scheme, n, grid)
    f = np.asarray(f, dtype=complex)
    f2 = f[:, None] if f.ndim == 1 else f
    times = grid.times
    out = np.empty((len(times),) + f2.shape, dtype=complex)
    if scheme.sampling is Sampling.TIME_SCALED and not fam.is_constant:
        for i, t in enumerate(times):
            p = _projection_for(fam, scheme, n, t)
            out[i] = _evolve_block(h, p, f2, times[i:i + 1], n, scheme.shape, scheme.epsilon)[0]
    else:
        p = _projection_for(fam, scheme, n, 0.0)
        r, d = p.rank, h.dim
        per_time = 16 * (3 * r * r + 2 * r * d + d * f2.shape[1])
        step = max(1, chunk_bytes // max(per_time, 1))
        for s in range(0, len(times), step):
            out[s:s + step] = _evolve_block(h, p, f2, times[s:s + step], n, scheme.shape, scheme.epsilon)
    states = out[:, :, 0] if f.ndim == 1 else out
    meta = {"n": n, "shape": scheme.shape.value, "sampling": scheme.sampling.value,
            "epsilon": scheme.epsilon, "family": fam.kind}
    return EvolutionTrace(grid, states, meta)


def step_matrix(h: HermitianOperator, p: OrthogonalProjection, t: float, n: int, shape: Shape,
                epsilon: int = 1) -> np.ndarray:
    """Single full-dimension factor whose n-th power is the Zeno product."""
    u = (h.eigenvectors * np.exp(-1j * epsilon * t * h.eigenvalues / n)) @ h.eigenvectors.conj().T
    pm = p.matrix
    shape = Shape(shape)
    if shape is Shape.SYMMETRIC:
        return pm @ u @ pm
    if shape is Shape.LEFT_PROJECTED:
        return pm @ u
    return u @ pm


def zeno_evolve_naive(h: HermitianOperator, fam: ProjectionFamily, f, grid: TimeGrid, n: int,
                      scheme: ZenoScheme = ZenoScheme()) -> EvolutionTrace:
    """Reference path: n sequential full-dimension steps per grid time."""
    n = _check_n(n)
    _check_sampling(fam, scheme, n, grid)
    f = np.asarray(f, dtype=complex)
    states = []
    for t in grid.times:
        g = step_matrix(h, _projection_for(fam, scheme, n, t), t, n, scheme.shape, scheme.epsilon)
        y = f.copy()
        for _ in range(n):
            y = g @ y
        states.append(y)
    meta = {"n": n, "shape": scheme.shape.value, "sampling": scheme.sampling.value,
            "epsilon": scheme.epsilon, "family": fam.kind, "path": "naive"}
    return EvolutionTrace(grid, np.array(states), meta)


def reference_evolve(hp: HermitianOperator, p: OrthogonalProjection, f, grid: TimeGrid,
                     epsilon: int = 1) -> EvolutionTrace:
    """Limit trajectory ``exp(-i eps t H_P) P f`` on the grid."""
    f = np.asarray(f, dtype=complex)
    w, lam = hp.eigenvectors, hp.eigenvalues
    coeff = w.conj().T @ (p.matrix @ f)
    ph = np.exp(-1j * epsilon * np.outer(grid.times, lam))
    if f.ndim == 1:
        states = (ph * coeff[None, :]) @ w.T
    else:
        states = np.einsum("ij,mj,jk->mik", w, ph, coeff)
    return EvolutionTrace(grid, states, {"reference": True, "epsilon": epsilon})
