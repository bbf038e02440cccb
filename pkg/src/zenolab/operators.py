"""Builders for the concrete operators used in Zeno experiments.

Discrete Dirichlet Laplacians on 1D/2D grids, indicator and rank-r
projections, multiplication operators, continuous projection families
``tau -> P(tau)`` and seeded random instances.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BadGridError,
    BadParamsError,
    DependentVectorsError,
    EmptyMaskError,
    NegativeValueError,
    SamplingOutOfRangeError,
)
from .linalg import HermitianOperator, OrthogonalProjection, clamp_spectrum

RNG_ALGORITHM = "numpy.random.default_rng/PCG64"


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid of interior points of a box with Dirichlet walls.

    ``mask`` has shape ``(N,)`` in 1D and ``(N, N)`` in 2D; flattened
    row-major it labels which grid points belong to the measured region.
    """

    dimension: int
    points_per_side: int
    spacing: float
    mask: np.ndarray

    @property
    def size(self) -> int:
        return self.points_per_side**self.dimension

    @property
    def flat_mask(self) -> np.ndarray:
        return np.asarray(self.mask, dtype=bool).reshape(-1)

    def coordinates(self, origin: float = 0.0) -> np.ndarray:
        """Node coordinates along one side: ``origin + h*j`` for ``j = 1..N``."""
        return origin + self.spacing * np.arange(1, self.points_per_side + 1)


def interval_grid(points: int, omega: tuple[float, float], box: tuple[float, float] = (0.0, 1.0)) -> GridSpec:
    """1D grid of ``points`` interior nodes on ``box`` with mask ``omega[0] < x < omega[1]``."""
    if points < 3:
        raise BadGridError(f"need at least 3 points, got {points}")
    a, b = box
    h = (b - a) / (points + 1)
    x = a + h * np.arange(1, points + 1)
    mask = (x > omega[0]) & (x < omega[1])
    return GridSpec(1, points, h, mask)


def square_grid(points: int, omega: Callable[[np.ndarray, np.ndarray], np.ndarray],
                box: tuple[float, float] = (0.0, 1.0)) -> GridSpec:
    """2D grid on ``box x box``; ``omega(X, Y)`` returns the boolean region mask."""
    if points < 3:
        raise BadGridError(f"need at least 3 points, got {points}")
    a, b = box
    h = (b - a) / (points + 1)
    x = a + h * np.arange(1, points + 1)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    return GridSpec(2, points, h, np.asarray(omega(xx, yy), dtype=bool))


def _tridiag_laplacian(n: int, h: float) -> np.ndarray:
    lap = 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    return lap / h**2


def build_discrete_laplacian(spec: GridSpec) -> HermitianOperator:
    """``-Delta`` with the 3-point (1D) or 5-point (2D) stencil, Dirichlet walls."""
    n = spec.points_per_side
    if n < 3:
        raise BadGridError(f"need at least 3 points per side, got {n}")
    if spec.spacing <= 0:
        raise BadGridError(f"spacing must be positive, got {spec.spacing}")
    lap = _tridiag_laplacian(n, spec.spacing)
    if spec.dimension == 1:
        m = lap
    elif spec.dimension == 2:
        eye = np.eye(n)
        m = np.kron(lap, eye) + np.kron(eye, lap)
    else:
        raise BadGridError(f"unsupported dimension {spec.dimension}")
    return HermitianOperator.from_matrix(m, nonnegative=True)


def build_indicator_projection(spec: GridSpec) -> OrthogonalProjection:
    mask = spec.flat_mask
    if mask.size != spec.size:
        raise BadGridError(f"mask has {mask.size} entries, grid has {spec.size}")
    if not mask.any():
        raise EmptyMaskError("mask selects no grid points")
    eye = np.eye(mask.size)
    return OrthogonalProjection.from_basis(eye[:, mask])


def build_multiplication_operator(diag_values: Sequence[float]) -> HermitianOperator:
    vals = np.asarray(diag_values, dtype=float)
    if vals.ndim != 1 or vals.size == 0:
        raise NegativeValueError("need a nonempty vector of values")
    if np.any(vals < 0):
        raise NegativeValueError(f"negative entry {vals.min()!r}")
    return HermitianOperator.from_eig(vals, np.eye(vals.size))


def orthonormalize(vectors) -> np.ndarray:
    """Modified Gram-Schmidt with one reorthogonalization pass.

    Raises DependentVectorsError when the Gram matrix condition number
    exceeds 1e12.
    """
    v = np.array(vectors, dtype=complex)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[1] == 0 or v.shape[1] > v.shape[0]:
        raise DependentVectorsError(f"cannot span {v.shape[1]} independent vectors in dimension {v.shape[0]}")
    gram = v.conj().T @ v
    if np.linalg.cond(gram) > 1e12:
        raise DependentVectorsError("vectors are numerically linearly dependent")
    q = np.zeros_like(v)
    for j in range(v.shape[1]):
        w = v[:, j].copy()
        for _ in range(2):
            for i in range(j):
                w -= (q[:, i].conj() @ w) * q[:, i]
        q[:, j] = w / np.linalg.norm(w)
    return q


def build_rank_r_projection(vectors) -> OrthogonalProjection:
    return OrthogonalProjection.from_basis(orthonormalize(vectors))


@dataclass(frozen=True)
class ProjectionFamily:
    """A strongly continuous map ``tau -> P(tau)`` on ``[0, tau_max]``.

    ``lipschitz`` is the declared constant L with
    ``||P(tau) - P(tau')||_2 <= L |tau - tau'|``.
    """

    base: OrthogonalProjection
    sampler: Callable[[float], OrthogonalProjection] = field(repr=False)
    tau_max: float
    kind: str
    lipschitz: float = 0.0

    def __call__(self, tau: float) -> OrthogonalProjection:
        if tau < 0 or tau > self.tau_max * (1 + 1e-12):
            raise SamplingOutOfRangeError(f"tau={tau!r} outside [0, {self.tau_max}]")
        if tau == 0:
            return self.base
        return self.sampler(tau)

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant" or self.lipschitz == 0.0


def constant_family(p: OrthogonalProjection) -> ProjectionFamily:
    return ProjectionFamily(p, lambda tau: p, np.inf, "constant", 0.0)


def rotating_rank_one_family(psi0, direction, rate: float, tau_max: float = 1.0) -> ProjectionFamily:
    """Rank-one projections onto ``cos(rate*tau) psi0 + sin(rate*tau) psi1``.

    ``psi1`` is ``direction`` orthonormalized against ``psi0``.
    """
    if tau_max <= 0:
        raise BadParamsError("tau_max must be positive")
    try:
        q = orthonormalize(np.column_stack([np.asarray(psi0, complex), np.asarray(direction, complex)]))
    except DependentVectorsError as exc:
        raise BadParamsError("direction must not be parallel to psi0") from exc
    psi0n, psi1 = q[:, 0], q[:, 1]
    base = OrthogonalProjection.from_basis(psi0n)

    def sample(tau: float) -> OrthogonalProjection:
        th = rate * tau
        return OrthogonalProjection.from_basis(np.cos(th) * psi0n + np.sin(th) * psi1)

    return ProjectionFamily(base, sample, float(tau_max), "rotating_rank_one", abs(float(rate)))


def sliding_window_family(spec: GridSpec, speed: float, tau_max: float = 1.0) -> ProjectionFamily:
    """Indicator projection of a 1D window moving ``speed`` grid steps per unit tau.

    Between integer shifts the leaving and entering nodes are rotated into
    each other within their two-dimensional span, which keeps the family
    Lipschitz with constant ``pi/2 * |speed|``.
    """
    if spec.dimension != 1:
        raise BadParamsError("sliding windows are defined on 1D grids")
    if tau_max <= 0:
        raise BadParamsError("tau_max must be positive")
    mask = spec.flat_mask
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise EmptyMaskError("mask selects no grid points")
    lo, hi = int(idx[0]), int(idx[-1])
    if idx.size != hi - lo + 1:
        raise BadParamsError("sliding window needs a contiguous mask")
    n = spec.points_per_side
    reach = int(np.ceil(abs(speed) * tau_max))
    if (speed > 0 and hi + reach > n - 1) or (speed < 0 and lo - reach < 0):
        raise BadParamsError("window leaves the grid before tau_max")
    base = build_indicator_projection(spec)
    if speed == 0:
        return ProjectionFamily(base, lambda tau: base, float(tau_max), "sliding_window", 0.0)
    sign = 1 if speed > 0 else -1
    eye = np.eye(n)

    def sample(tau: float) -> OrthogonalProjection:
        s = abs(speed) * tau
        j = int(np.floor(s))
        frac = s - j
        a, b = lo + sign * j, hi + sign * j
        if frac == 0.0:
            return OrthogonalProjection.from_basis(eye[:, a:b + 1])
        if sign > 0:
            leaving, entering, keep = a, b + 1, list(range(a + 1, b + 1))
        else:
            leaving, entering, keep = b, a - 1, list(range(a, b))
        th = 0.5 * np.pi * frac
        moving = np.cos(th) * eye[:, leaving] + np.sin(th) * eye[:, entering]
        return OrthogonalProjection.from_basis(np.column_stack([eye[:, keep], moving]))

    return ProjectionFamily(base, sample, float(tau_max), "sliding_window", 0.5 * np.pi * abs(speed))


def conjugated_family(p: OrthogonalProjection, generator, tau_max: float = 1.0) -> ProjectionFamily:
    """``P(tau) = e^{-i tau K} P e^{i tau K}`` for a Hermitian generator K.

    Registered as a custom family with Lipschitz constant ``2 ||K||_2``.
    """
    k = HermitianOperator.from_matrix(generator)
    v = p.basis

    def sample(tau: float) -> OrthogonalProjection:
        u = (k.eigenvectors * np.exp(-1j * tau * k.eigenvalues)) @ k.eigenvectors.conj().T
        return OrthogonalProjection.from_basis(u @ v)

    return ProjectionFamily(p, sample, float(tau_max), "custom", 2.0 * k.norm2)


def build_projection_family(kind: str, **params) -> ProjectionFamily:
    """Dispatch on ``kind``: constant, rotating_rank_one, sliding_window, custom."""
    try:
        if kind == "constant":
            return constant_family(params["projection"])
        if kind == "rotating_rank_one":
            return rotating_rank_one_family(params["psi0"], params["direction"], params["rate"],
                                            params.get("tau_max", 1.0))
        if kind == "sliding_window":
            return sliding_window_family(params["grid"], params["speed"], params.get("tau_max", 1.0))
        if kind == "custom":
            if "generator" in params:
                return conjugated_family(params["projection"], params["generator"], params.get("tau_max", 1.0))
            return ProjectionFamily(params["base"], params["sampler"], float(params["tau_max"]), "custom",
                                    float(params.get("lipschitz", np.inf)))
    except KeyError as exc:
        raise BadParamsError(f"missing parameter {exc} for family {kind!r}") from exc
    raise BadParamsError(f"unknown family kind {kind!r}")


def haar_unitary(rng: np.random.Generator, dim: int, real: bool = False) -> np.ndarray:
    z = rng.standard_normal((dim, dim))
    if not real:
        z = (z + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def build_random_hermitian(seed: int, dim: int, spectrum=("uniform", 1.0), real: bool = False) -> HermitianOperator:
    """Seeded ``U diag(spectrum) U*`` with Haar-distributed U.

    ``spectrum`` is either ``("uniform", lam_max)`` or an explicit list of
    eigenvalues.  ``real=True`` draws U from the orthogonal group instead.
    """
    if dim < 1:
        raise BadParamsError("dim must be at least 1")
    rng = np.random.default_rng(seed)
    u = haar_unitary(rng, dim, real)
    if isinstance(spectrum, tuple) and len(spectrum) == 2 and spectrum[0] == "uniform":
        w = np.sort(rng.uniform(0.0, float(spectrum[1]), dim))
    else:
        w = np.asarray(spectrum, dtype=float)
        if w.shape != (dim,):
            raise BadParamsError(f"spectrum has {w.size} values for dim {dim}")
    return HermitianOperator.from_eig(w, u)


def build_random_projection(seed: int, dim: int, rank: int, real: bool = False) -> OrthogonalProjection:
    if not 1 <= rank <= dim:
        raise BadParamsError(f"rank {rank} not in [1, {dim}]")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((dim, rank))
    if not real:
        z = z + 1j * rng.standard_normal((dim, rank))
    q, _ = np.linalg.qr(z)
    return OrthogonalProjection.from_basis(q)


def random_state(seed: int, dim: int, real: bool = False) -> np.ndarray:
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(dim)
    if not real:
        f = f + 1j * rng.standard_normal(dim)
    return f / np.linalg.norm(f)


def is_psd(h: HermitianOperator) -> bool:
    try:
        clamp_spectrum(h.eigenvalues)
    except ValueError:
        return False
    return True
