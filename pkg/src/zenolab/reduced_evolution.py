"""Reduced evolution ``F(zeta, tau) = P(tau) e^{-zeta tau H} P(tau)`` and friends.

F is a contraction for ``Re zeta >= 0`` and ``S(zeta, tau) = (I - F)/tau``
is accretive.  This module builds both, their resolvents, and residual
checks for the exact identities and inequalities linking the discrete
products to the semigroup generated by ``H_P``.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import (
    BadZetaError,
    NotContractionError,
    SamplingOutOfRangeError,
    SingularSystemError,
    ZeroArgumentError,
    ZeroZetaError,
)
from .linalg import HermitianOperator, apply_spectral_fn, matrix_exp_general, operator_sqrt
from .operators import ProjectionFamily
from .zeno import compute_HP

SINGULAR_COND = 1e14


def _projection(fam: ProjectionFamily, tau: float):
    if not tau > 0:
        raise SamplingOutOfRangeError(f"tau must be positive, got {tau!r}")
    return fam(tau)


def _check_zeta(zeta) -> complex:
    zeta = complex(zeta)
    if zeta.real < 0:
        raise BadZetaError(f"Re zeta must be nonnegative, got {zeta!r}")
    return zeta


def _exp_h(h: HermitianOperator, z: complex) -> np.ndarray:
    """``exp(-z H)``."""
    return apply_spectral_fn(h, lambda lam: np.exp(-z * lam))


def compute_F(h: HermitianOperator, fam: ProjectionFamily, zeta, tau: float) -> np.ndarray:
    zeta = _check_zeta(zeta)
    p = _projection(fam, tau).matrix
    return p @ _exp_h(h, zeta * tau) @ p


def compute_S(h: HermitianOperator, fam: ProjectionFamily, zeta, tau: float) -> np.ndarray:
    f = compute_F(h, fam, zeta, tau)
    return (np.eye(h.dim) - f) / tau


def compute_Hzeta(h: HermitianOperator, zeta) -> np.ndarray:
    """``(I - e^{-zeta H}) / zeta``."""
    zeta = complex(zeta)
    if zeta == 0:
        raise ZeroZetaError("zeta must be nonzero")
    _check_zeta(zeta)
    return apply_spectral_fn(h, lambda lam: -np.expm1(-zeta * lam) / zeta)


def decompose_BA(h: HermitianOperator, s: float) -> tuple[HermitianOperator, HermitianOperator]:
    """Split ``i H(is) = B + iA`` with ``B = (I - cos sH)/s`` and ``A = sin(sH)/s``.

    B is nonnegative for ``s > 0`` (and nonpositive for ``s < 0``).
    """
    s = float(s)
    if s == 0:
        raise ZeroArgumentError("s must be nonzero")
    lam = h.eigenvalues
    b = 2.0 * np.sin(0.5 * s * lam) ** 2 / s
    a = np.sin(s * lam) / s
    return HermitianOperator.from_eig(b, h.eigenvectors), HermitianOperator.from_eig(a, h.eigenvectors)


def sine_identity_residual(h: HermitianOperator, s: float, w) -> float:
    """``| ||s H(is) w||^2 - 4 ||sin(sH/2) w||^2 |``."""
    w = np.asarray(w, dtype=complex)
    lhs = np.linalg.norm(s * compute_Hzeta(h, 1j * s) @ w) ** 2
    half = apply_spectral_fn(h, lambda lam: np.sin(0.5 * s * lam))
    return float(abs(lhs - 4.0 * np.linalg.norm(half @ w) ** 2))


def _inverse_checked(m: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(m, 1)
    if not np.isfinite(cond) or cond > SINGULAR_COND:
        raise SingularSystemError(f"condition number {cond:.3e} exceeds {SINGULAR_COND:.0e}")
    lu = scipy.linalg.lu_factor(m)
    return scipy.linalg.lu_solve(lu, np.eye(m.shape[0], dtype=m.dtype))


def resolvent_S(h: HermitianOperator, fam: ProjectionFamily, zeta, tau: float) -> np.ndarray:
    """``(I + S(zeta, tau))^{-1}`` by LU with partial pivoting."""
    s = compute_S(h, fam, zeta, tau)
    return _inverse_checked(np.eye(h.dim) + s)


def resolvent_limit(hp: HermitianOperator, p, zeta) -> np.ndarray:
    """``(I + zeta H_P)^{-1} P``, the tau -> 0 limit of :func:`resolvent_S`."""
    zeta = complex(zeta)
    return apply_spectral_fn(hp, lambda lam: 1.0 / (1.0 + zeta * lam)) @ p.matrix


def commutator(h: HermitianOperator, fam: ProjectionFamily, t: float, tau: float) -> np.ndarray:
    """``[e^{-i t tau H}, P(tau)]``."""
    p = _projection(fam, tau).matrix
    if t == 0:
        return np.zeros_like(p)
    u = _exp_h(h, 1j * t * tau)
    return u @ p - p @ u


def nonsym_identity_residual(h: HermitianOperator, fam: ProjectionFamily, t: float, n: int, f) -> float:
    """Residual of ``(PU)^n f - (PUP)^n f + P (PUP)^(n-1) [U, P] f`` with ``P = P(1/n)``.

    The leading P on the last term is what makes the identity exact at
    ``n = 1``; for ``n >= 2`` it is absorbed by ``(PUP)^(n-1)``.
    """
    p = _projection(fam, 1.0 / n).matrix
    u = _exp_h(h, 1j * t / n)
    f = np.asarray(f, dtype=complex)
    pu = p @ u
    pup = pu @ p
    a, b = f, f
    for _ in range(n):
        a = pu @ a
        b = pup @ b
    c = u @ (p @ f) - p @ (u @ f)
    for _ in range(n - 1):
        c = pup @ c
    return float(np.linalg.norm(a - b + p @ c))


def chernoff_gap(F, g, n: int) -> tuple[float, float]:
    """Both sides of ``||F^n g - e^{-n(I-F)} g|| <= sqrt(n) ||(I-F) g||``."""
    F = np.asarray(F, dtype=complex)
    g = np.asarray(g, dtype=complex)
    nrm = np.linalg.norm(F, 2)
    if nrm > 1 + 1e-10:
        raise NotContractionError(f"||F||_2 = {nrm!r} exceeds 1")
    eye = np.eye(F.shape[0])
    fn = np.linalg.matrix_power(F, n) @ g
    semi = matrix_exp_general(-n * (eye - F)) @ g
    lhs = float(np.linalg.norm(fn - semi))
    rhs = float(np.sqrt(n) * np.linalg.norm((eye - F) @ g))
    return lhs, rhs


def semigroup_vs_limit(h: HermitianOperator, fam: ProjectionFamily, t: float, tau: float, f) -> float:
    """``||e^{-S(it, tau)} f - e^{-it H_P} f||``."""
    f = np.asarray(f, dtype=complex)
    s = compute_S(h, fam, 1j * t, tau)
    hp = compute_HP(h, fam.base)
    limit = apply_spectral_fn(hp, lambda lam: np.exp(-1j * t * lam)) @ f
    return float(np.linalg.norm(matrix_exp_general(-s) @ f - limit))


def resolvent_lipschitz(h: HermitianOperator, fam: ProjectionFamily, a: float, tau: float,
                        t: float, t_prime: float, f, samples: int = 64) -> tuple[float, float]:
    """Gap between resolvent trajectories at t and t' and its Lipschitz bound.

    Uses ``S_a(it, tau)`` built from ``P(a tau)``.  The constant
    ``C(a) = sup ||H^{1/2} P(a tau)||^2`` is taken over ``samples``
    log-spaced values of tau in (0, 1] together with ``tau`` itself.
    """
    if not 0 < tau <= 1:
        raise SamplingOutOfRangeError(f"tau must lie in (0, 1], got {tau!r}")
    if a < 0:
        raise SamplingOutOfRangeError("families are sampled on tau >= 0; need a >= 0")
    f = np.asarray(f, dtype=complex)
    p = fam(a * tau).matrix
    eye = np.eye(h.dim)

    def u_a(time: float) -> np.ndarray:
        s = (eye - p @ _exp_h(h, 1j * time * tau) @ p) / tau
        return _inverse_checked(eye + s) @ f

    gap = float(np.linalg.norm(u_a(t) - u_a(t_prime)))
    root = operator_sqrt(h).matrix
    grid = np.geomspace(1e-3, 1.0, samples - 1)
    if a > 0:
        grid = grid[a * grid <= fam.tau_max]
    grid = np.append(grid, tau)
    c = max(np.linalg.norm(root @ fam(a * x).matrix, 2) ** 2 for x in grid)
    return gap, float(c * abs(t - t_prime) * np.linalg.norm(f))
