"""Scalar reduced evolution for multiplication by x on the half-line.

With ``psi0(x) = [(pi/2)(1 + x^2)]^{-1/2}`` the compressed propagator is
multiplication by

    v(t) = <psi0, e^{-itx} psi0> = (2/pi) int_0^{pi/2} exp(-i t tan(theta)) dtheta,

whose real part is exactly ``exp(-t)`` and whose imaginary part behaves like
``(2/pi) t ln t`` near zero.  The phase of ``v(t/nu)^nu`` therefore keeps
winding as nu grows, so the Zeno products have no pointwise limit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadTError, NoConvergenceError, PhaseNotReachedError

T_MAX = 100.0
PANEL_CAP = 2**20
GL_ORDER = 20
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(GL_ORDER)


def _breakpoints(t: float, x_end: float, level: int) -> np.ndarray:
    """Panel edges in x: each panel spans at most a fraction of a period
    of ``e^{-itx}`` and at most a fixed fraction of its distance to the
    ``theta = pi/2`` pole of ``tan``."""
    scale = 2.0**-level
    period_step = np.pi / t * scale
    rel_step = 0.5 * scale
    pts = [0.0]
    x = 0.0
    while x < x_end:
        x = min(x + min(period_step, rel_step * max(x, 1.0)), x_end)
        pts.append(x)
        if len(pts) > PANEL_CAP:
            raise NoConvergenceError(f"panel cap {PANEL_CAP} exceeded at t={t!r}")
    return np.array(pts)


def _finite_part(t: float, x_end: float, level: int) -> complex:
    """``int_0^{arctan x_end} exp(-i t tan(theta)) dtheta`` by composite Gauss-Legendre in theta."""
    th = np.arctan(_breakpoints(t, x_end, level))
    a, b = th[:-1, None], th[1:, None]
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b) + half * _GL_NODES[None, :]
    vals = np.exp(-1j * t * np.tan(nodes))
    return complex(np.sum(half * (vals @ _GL_WEIGHTS)[:, None]))


def _tail(t: float, x_end: float, terms: int = 60) -> complex:
    """``int_X^inf e^{-itx} / (1 + x^2) dx`` from the integration-by-parts series.

    Uses ``d^k/dx^k (1 + x^2)^{-1} = Im[(-1)^k k! (x - i)^{-(k+1)}]`` and
    truncates at the smallest term.
    """
    total = 0j
    prev = np.inf
    z = x_end - 1j
    fact = 1.0
    for k in range(terms):
        if k:
            fact *= k
        deriv = ((-1) ** k * fact / z ** (k + 1)).imag
        term = deriv / (1j * t) ** (k + 1)
        if abs(term) >= prev:
            break
        total += term
        prev = abs(term)
        if prev < 1e-20:
            break
    return np.exp(-1j * t * x_end) * total


def v_of_t(t: float, rel_tol: float = 1e-12) -> complex:
    """Evaluate ``v(t)`` by adaptive panel doubling under ``x = tan(theta)``.

    The oscillatory range ``x > X`` with ``t X = 40`` is summed
    asymptotically; the finite part is refined until two successive
    levels agree to ``rel_tol`` relative to ``|v|``.
    """
    t = float(t)
    if not 0.0 <= t <= T_MAX or not np.isfinite(t):
        raise BadTError(f"t must lie in [0, {T_MAX}], got {t!r}")
    if rel_tol < 1e-12:
        raise ValueError("rel_tol below 1e-12 is not attainable")
    if t == 0.0:
        return 1.0 + 0.0j
    x_end = max(40.0 / t, 4.0)
    tail = _tail(t, x_end)
    prev = None
    for level in range(0, 21):
        cur = _finite_part(t, x_end, level)
        if prev is not None and abs(cur - prev) <= 0.25 * rel_tol * abs(cur + tail):
            return complex((2.0 / np.pi) * (cur + tail))
        prev = cur
    raise NoConvergenceError(f"no convergence for t={t!r} at rel_tol={rel_tol!r}")


def v_asymptotic(t: float) -> complex:
    """Small-t form ``1 + (2i/pi) t ln t``."""
    t = float(t)
    if not 0.0 < t < 1.0:
        raise BadTError(f"asymptote is used for 0 < t < 1, got {t!r}")
    return 1.0 + 2j / np.pi * t * np.log(t)


@dataclass(frozen=True)
class ScalarZenoTrajectory:
    t: float
    nu: np.ndarray
    values: np.ndarray
    unwrapped_phase: np.ndarray

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def winding(self) -> float:
        """Total variation of the unwrapped phase along the nu grid."""
        return float(np.sum(np.abs(np.diff(self.unwrapped_phase))))


def scalar_zeno_trajectory(t: float, nu_min: float = 1e2, nu_max: float = 1e6,
                           samples_per_decade: int = 50, rel_tol: float = 1e-12) -> ScalarZenoTrajectory:
    """``v(t/nu)^nu`` on a log-uniform nu grid, with n relaxed to real nu."""
    if nu_min < 10 or nu_max > 1e7 or nu_max <= nu_min:
        raise ValueError(f"need 10 <= nu_min < nu_max <= 1e7, got [{nu_min}, {nu_max}]")
    if samples_per_decade < 1:
        raise ValueError("samples_per_decade must be positive")
    decades = np.log10(nu_max / nu_min)
    nu = np.geomspace(nu_min, nu_max, int(np.ceil(decades * samples_per_decade)) + 1)
    # v(t/nu) is within O(t/nu) of 1, so the principal log is the continuous branch
    logs = np.array([np.log(v_of_t(t / x, rel_tol)) for x in nu])
    values = np.exp(nu * logs)
    phase = np.unwrap(np.angle(values))
    if phase.size > 1 and np.max(np.abs(np.diff(phase))) > 0.5 * np.pi:
        raise ValueError("nu grid too coarse to unwrap the phase; raise samples_per_decade")
    return ScalarZenoTrajectory(float(t), nu, values, phase)


def subsequence_limits(traj: ScalarZenoTrajectory, target_phases, tol: float = 0.05) -> list:
    """For each target phase, the first sampled nu whose phase is within ``tol`` (mod 2 pi)."""
    out = []
    for target in target_phases:
        gap = np.abs(np.angle(np.exp(1j * (traj.unwrapped_phase - target))))
        hits = np.flatnonzero(gap <= tol)
        if hits.size == 0:
            raise PhaseNotReachedError(f"phase {target!r} not reached on nu in "
                                       f"[{traj.nu[0]:g}, {traj.nu[-1]:g}]")
        out.append(float(traj.nu[hits[0]]))
    return out
