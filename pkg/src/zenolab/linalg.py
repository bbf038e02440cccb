"""Dense complex linear algebra used throughout zenolab.

Hermitian eigendecompositions, spectral calculus, operator square roots,
a scaling-and-squaring exponential for non-normal matrices, and the
orthogonal-projection wrapper.  Everything here returns read-only arrays so
operator values can be shared freely between threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DomainError,
    NegativeSpectrumError,
    NoConvergenceError,
    NotHermitianError,
    NotIdempotentError,
    NotSelfAdjointError,
    OverflowMatrixError,
)

ABS_FLOOR = 1e-14
HERMITIAN_TOL = 1e-10
CLAMP_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def as_complex_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


def hermitian_eig(a, tol: float = HERMITIAN_TOL) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    The symmetry residual ``||A - A*||_F`` must not exceed
    ``tol * max(1, ||A||_F)``.  The matrix is symmetrized before the LAPACK
    call so the returned eigenvectors are orthonormal to working precision.
    """
    m = as_complex_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise NotHermitianError(f"matrix is not square: {m.shape}")
    scale = max(1.0, np.linalg.norm(m))
    resid = np.linalg.norm(m - m.conj().T)
    if resid > max(tol * scale, ABS_FLOOR):
        raise NotHermitianError(f"symmetry residual {resid:.3e} exceeds {tol * scale:.3e}")
    sym = 0.5 * (m + m.conj().T)
    try:
        w, v = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise NoConvergenceError(str(exc)) from exc
    return EigenDecomposition(_frozen(w), _frozen(v))


@dataclass(frozen=True)
class HermitianOperator:
    """A dense self-adjoint matrix together with its spectral decomposition."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @classmethod
    def from_matrix(cls, a, nonnegative: bool = False, tol: float = HERMITIAN_TOL) -> "HermitianOperator":
        m = as_complex_matrix(a)
        dec = hermitian_eig(m, tol)
        w = dec.eigenvalues
        if nonnegative:
            w = clamp_spectrum(w)
        sym = 0.5 * (m + m.conj().T)
        return cls(_frozen(sym), _frozen(w), dec.eigenvectors)

    @classmethod
    def from_eig(cls, eigenvalues, eigenvectors) -> "HermitianOperator":
        w = np.asarray(eigenvalues, dtype=float)
        v = np.asarray(eigenvectors, dtype=complex)
        order = np.argsort(w, kind="stable")
        w, v = w[order], v[:, order]
        m = (v * w) @ v.conj().T
        m = 0.5 * (m + m.conj().T)
        return cls(_frozen(m), _frozen(w), _frozen(v))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def spectral_floor(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def norm2(self) -> float:
        return float(np.max(np.abs(self.eigenvalues))) if self.dim else 0.0

    @property
    def decomposition(self) -> EigenDecomposition:
        return EigenDecomposition(self.eigenvalues, self.eigenvectors)

    def shifted(self, c: float) -> "HermitianOperator":
        """``H + cI`` sharing this operator's eigenvectors."""
        return HermitianOperator.from_eig(self.eigenvalues + c, self.eigenvectors)


def clamp_spectrum(w: np.ndarray, tol: float = CLAMP_TOL) -> np.ndarray:
    """Zero out eigenvalues in ``[-tol*||H||_2, 0)``; reject anything lower."""
    w = np.asarray(w, dtype=float)
    if w.size == 0:
        return w
    scale = max(float(np.max(np.abs(w))), ABS_FLOOR)
    if w[0] < -tol * scale:
        raise NegativeSpectrumError(f"eigenvalue {w[0]:.3e} below clamp threshold {-tol * scale:.3e}")
    return np.where(w < 0.0, 0.0, w)


def apply_spectral_fn(h: HermitianOperator, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Return ``U f(Lambda) U*`` for the spectral decomposition of ``h``."""
    with np.errstate(all="ignore"):
        vals = np.asarray(f(h.eigenvalues))
    if vals.shape != h.eigenvalues.shape:
        vals = np.broadcast_to(vals, h.eigenvalues.shape)
    if not np.all(np.isfinite(vals)):
        bad = h.eigenvalues[~np.isfinite(vals)]
        raise DomainError(f"function undefined at eigenvalue(s) {bad[:4]}")
    u = h.eigenvectors
    out = (u * vals) @ u.conj().T
    if not np.iscomplexobj(vals) or np.all(np.imag(vals) == 0):
        out = 0.5 * (out + out.conj().T)
    return out


def operator_sqrt(h: HermitianOperator) -> HermitianOperator:
    w = clamp_spectrum(h.eigenvalues)
    return HermitianOperator.from_eig(np.sqrt(w), h.eigenvectors)


TAYLOR_TERMS = 25
MAX_SQUARINGS = 40


def matrix_exp_general(m) -> np.ndarray:
    """``exp(M)`` for an arbitrary square matrix by scaling and squaring.

    M is scaled by ``2**-s`` until its one-norm is at most 0.5, the
    exponential of the scaled matrix is summed as a 25-term Taylor series,
    and the result is squared ``s`` times.
    """
    a = as_complex_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix is not square: {a.shape}")
    d = a.shape[0]
    nrm = np.linalg.norm(a, 1)
    s = 0
    if nrm > 0.5:
        s = int(np.ceil(np.log2(nrm / 0.5)))
    if s > MAX_SQUARINGS:
        raise OverflowMatrixError(f"norm {nrm:.3e} needs {s} squarings (cap {MAX_SQUARINGS})")
    a = a / 2.0**s
    eye = np.eye(d, dtype=complex)
    # Horner form of sum_k a^k / k!
    e = eye.copy()
    for k in range(TAYLOR_TERMS, 0, -1):
        e = eye + (a @ e) / k
    for _ in range(s):
        e = e @ e
    if not np.all(np.isfinite(e)):
        raise OverflowMatrixError("matrix exponential overflowed")
    return e


@dataclass(frozen=True)
class OrthogonalProjection:
    """An orthogonal projection ``P = V V*`` with an orthonormal range basis."""

    matrix: np.ndarray
    rank: int
    basis: np.ndarray

    @classmethod
    def from_basis(cls, v) -> "OrthogonalProjection":
        v = np.asarray(v, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        p = v @ v.conj().T
        p = 0.5 * (p + p.conj().T)
        return cls(_frozen(p), v.shape[1], _frozen(v))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def complement(self) -> np.ndarray:
        return np.eye(self.dim) - self.matrix


def validate_projection(p, tol: float = 1e-10) -> OrthogonalProjection:
    """Check that ``p`` is an orthogonal projection and wrap it.

    Residuals are measured in Frobenius norm and compared with ``tol * dim``.
    """
    m = as_complex_matrix(p)
    d = m.shape[0]
    if m.shape[0] != m.shape[1]:
        raise NotIdempotentError(f"matrix is not square: {m.shape}")
    bound = max(tol * d, ABS_FLOOR)
    sa = np.linalg.norm(m - m.conj().T)
    if sa > bound:
        raise NotSelfAdjointError(f"self-adjointness residual {sa:.3e} exceeds {bound:.3e}")
    idem = np.linalg.norm(m @ m - m)
    if idem > bound:
        raise NotIdempotentError(f"idempotency residual {idem:.3e} exceeds {bound:.3e}")
    tr = float(np.real(np.trace(m)))
    rank = int(round(tr))
    if abs(tr - rank) > 1e-8:
        raise NotIdempotentError(f"trace {tr!r} is not an integer")
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    basis = v[:, d - rank:] if rank else np.zeros((d, 0), dtype=complex)
    return OrthogonalProjection(_frozen(m), rank, _frozen(basis))
