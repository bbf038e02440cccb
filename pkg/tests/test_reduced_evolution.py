import numpy as np
import pytest

from zenolab.errors import BadZetaError, NotContractionError, SingularSystemError, ZeroArgumentError, ZeroZetaError
from zenolab.reduced_evolution import (_inverse_checked, chernoff_gap, commutator, compute_F, compute_Hzeta, compute_S,
                            decompose_BA, nonsym_identity_residual, resolvent_limit, resolvent_lipschitz,
                            resolvent_S, semigroup_vs_limit, sine_identity_residual)
from zenolab.linalg import HermitianOperator, OrthogonalProjection, apply_spectral_fn, operator_sqrt
from zenolab.operators import (build_random_hermitian, build_random_projection, constant_family, conjugated_family,
                               random_state)
from zenolab.zeno import compute_HP


def _inst(seed, dim=16, rank=4, moving=False):
    h = build_random_hermitian(seed, dim, ("uniform", 5.0))
    p = build_random_projection(seed + 1, dim, rank)
    fam = conjugated_family(p, build_random_hermitian(seed + 2, dim).matrix) if moving else constant_family(p)
    return h, fam, random_state(seed + 3, dim)


def _identity_family(dim):
    return constant_family(OrthogonalProjection.from_basis(np.eye(dim)))


class TestF:
    def test_zeta_zero(self):
        h, fam, _ = _inst(0, moving=True)
        np.testing.assert_allclose(compute_F(h, fam, 0, 0.3), fam(0.3).matrix, atol=1e-14)

    def test_identity_family(self):
        h, _, _ = _inst(1)
        ref = apply_spectral_fn(h, lambda x: np.exp(-(0.5 + 1j) * 0.2 * x))
        np.testing.assert_allclose(compute_F(h, _identity_family(16), 0.5 + 1j, 0.2), ref, atol=1e-14)

    def test_contraction(self):
        h, fam, _ = _inst(2)
        assert np.linalg.norm(compute_F(h, fam, 1j, 0.1), 2) <= 1 + 1e-10

    def test_bad_zeta(self):
        h, fam, _ = _inst(3)
        with pytest.raises(BadZetaError):
            compute_F(h, fam, -0.1 + 1j, 0.1)


class TestS:
    def test_identity_family_zeta_zero(self):
        h, _, _ = _inst(4)
        assert np.max(np.abs(compute_S(h, _identity_family(16), 0, 0.5))) < 1e-14

    def test_zeta_zero_is_complement(self):
        h, fam, _ = _inst(5, moving=True)
        tau = 0.25
        np.testing.assert_allclose(compute_S(h, fam, 0, tau), fam(tau).complement / tau, atol=1e-13)

    @pytest.mark.parametrize("zeta", [1j, 3j, 1.0, 0.5 - 2j])
    def test_accretive(self, zeta):
        h, fam, _ = _inst(6, moving=True)
        tau = 0.05
        s = compute_S(h, fam, zeta, tau)
        vals = [np.vdot(f, s @ f).real for f in (random_state(k, 16) for k in range(100))]
        assert min(vals) >= -1e-10 / tau


class TestHzeta:
    def test_zero_operator(self):
        h = HermitianOperator.from_matrix(np.zeros((3, 3)))
        assert np.max(np.abs(compute_Hzeta(h, 2j))) == 0

    def test_scalar_closed_form(self):
        h = HermitianOperator.from_matrix([[1.0]])
        assert abs(compute_Hzeta(h, 1j * np.pi)[0, 0] - (-2j / np.pi)) < 1e-15

    def test_real_zeta(self):
        h, _, _ = _inst(7)
        m = compute_Hzeta(h, 1.0)
        assert np.linalg.norm(m - m.conj().T) < 1e-12
        np.testing.assert_allclose(np.linalg.eigvalsh(m), 1 - np.exp(-h.eigenvalues), atol=1e-12)

    def test_zero_zeta(self):
        with pytest.raises(ZeroZetaError):
            compute_Hzeta(HermitianOperator.from_matrix(np.eye(2)), 0)


class TestBA:
    def test_scalar(self):
        b, a = decompose_BA(HermitianOperator.from_matrix([[np.pi]]), 1.0)
        assert abs(b.matrix[0, 0] - 2) < 1e-14 and abs(a.matrix[0, 0]) < 1e-14

    @pytest.mark.parametrize("s", [0.01, 0.7, 3.0, -1.3])
    def test_split(self, s):
        h, _, w = _inst(8)
        b, a = decompose_BA(h, s)
        assert np.linalg.norm(1j * compute_Hzeta(h, 1j * s) - b.matrix - 1j * a.matrix) <= 1e-10
        if s > 0:
            assert b.spectral_floor >= 0
        else:
            assert b.eigenvalues[-1] <= 0
        assert sine_identity_residual(h, s, w) <= 1e-9 * np.linalg.norm(w) ** 2

    def test_zero_argument(self):
        with pytest.raises(ZeroArgumentError):
            decompose_BA(HermitianOperator.from_matrix(np.eye(2)), 0.0)


class TestResolvent:
    def test_zeta_zero(self):
        h, fam, _ = _inst(9, moving=True)
        tau = 0.125
        p = fam(tau)
        ref = p.matrix + p.complement / (1 + 1 / tau)
        np.testing.assert_allclose(resolvent_S(h, fam, 0, tau), ref, atol=1e-13)

    def test_identity_family_closed_form(self):
        h, _, _ = _inst(10)
        z, tau = 2j, 0.1
        ref = apply_spectral_fn(h, lambda x: 1 / (1 + (1 - np.exp(-z * tau * x)) / tau))
        np.testing.assert_allclose(resolvent_S(h, _identity_family(16), z, tau), ref, atol=1e-12)

    def test_tau_sweep(self):
        h, fam, _ = _inst(11)
        hp = compute_HP(h, fam.base)
        target = resolvent_limit(hp, fam.base, 1j)
        gaps = [np.linalg.norm(resolvent_S(h, fam, 1j, 2.0**-k) - target, 2) for k in range(3, 13)]
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 1e-2

    @pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
    def test_norm_bound(self, t):
        h, fam, _ = _inst(12, moving=True)
        assert np.linalg.norm(resolvent_S(h, fam, 1j * t, 0.2), 2) <= 1 + 1e-8

    def test_singular(self):
        with pytest.raises(SingularSystemError):
            _inverse_checked(np.array([[1.0, 1.0], [1.0, 1.0]]))


class TestCommutator:
    def test_spectral_projection(self):
        h, _, _ = _inst(13)
        p = OrthogonalProjection.from_basis(h.eigenvectors[:, :5])
        assert np.max(np.abs(commutator(h, constant_family(p), 1.0, 0.5))) < 1e-12

    def test_tau_halving(self):
        h, fam, _ = _inst(14, moving=True)
        norms = [np.linalg.norm(commutator(h, fam, 2.0, 2.0**-k), 2) for k in range(1, 10)]
        assert all(b < a for a, b in zip(norms, norms[1:]))

    def test_t_zero(self):
        h, fam, _ = _inst(15, moving=True)
        assert np.all(commutator(h, fam, 0.0, 0.3) == 0)


class TestNonsymIdentity:
    @pytest.mark.parametrize("seed", range(6))
    @pytest.mark.parametrize("n", [2, 7, 64])
    def test_seeded(self, seed, n):
        dim = 4 + 5 * seed
        h, fam, f = _inst(100 + seed, dim, 1 + seed, moving=seed % 2 == 1)
        assert nonsym_identity_residual(h, fam, 1.3, n, f) <= 1e-11 * np.linalg.norm(f)

    def test_full_projection_exact(self):
        h, _, f = _inst(16)
        assert nonsym_identity_residual(h, _identity_family(16), 1.0, 9, f) == 0.0

    def test_n_one(self):
        h, fam, f = _inst(17, moving=True)
        assert nonsym_identity_residual(h, fam, 3.0, 1, f) <= 1e-13 * np.linalg.norm(f)


class TestChernoff:
    def test_identity(self):
        assert chernoff_gap(np.eye(4), random_state(0, 4), 5) == (0.0, 0.0)

    def test_projection_fixed_point(self):
        p = build_random_projection(1, 6, 2)
        g = p.matrix @ random_state(2, 6)
        lhs, _ = chernoff_gap(p.matrix, g, 10)
        assert lhs < 1e-14

    @pytest.mark.parametrize("n", [1, 8, 64])
    def test_inequality_sampled(self, n):
        h, fam, _ = _inst(18, moving=True)
        F = compute_F(h, fam, 1j, 1.0 / n)
        for k in range(200):
            g = random_state(1000 + k, 16)
            lhs, rhs = chernoff_gap(F, g, n)
            assert lhs <= rhs + 1e-8 * np.linalg.norm(g)

    def test_not_contraction(self):
        with pytest.raises(NotContractionError):
            chernoff_gap(2 * np.eye(2), np.ones(2), 3)


class TestSemigroup:
    def test_diagonal_closed_form(self):
        lam = np.array([0.0, 0.5, 2.0, 4.0])
        h = HermitianOperator.from_matrix(np.diag(lam))
        f = random_state(3, 4)
        t, tau = 1.5, 0.05
        scal = np.exp(-(1 - np.exp(-1j * t * tau * lam)) / tau) - np.exp(-1j * t * lam)
        expect = np.linalg.norm(scal * f)
        assert abs(semigroup_vs_limit(h, _identity_family(4), t, tau, f) - expect) < 1e-12

    def test_t_zero(self):
        h, fam, f = _inst(19)
        g = fam.base.matrix @ f
        assert semigroup_vs_limit(h, fam, 0.0, 0.1, g) < 1e-12

    def test_tau_sweep(self):
        h, fam, f = _inst(20)
        g = fam.base.matrix @ f
        vals = [semigroup_vs_limit(h, fam, 1.0, 2.0**-k, g) for k in range(2, 10)]
        assert all(b < a for a, b in zip(vals, vals[1:]))


class TestLipschitz:
    def test_equal_times(self):
        h, fam, f = _inst(21, moving=True)
        gap, bound = resolvent_lipschitz(h, fam, 0.5, 0.1, 0.7, 0.7, f)
        assert gap == 0 and bound == 0

    def test_constant_family_constant(self):
        h, fam, f = _inst(22)
        c = np.linalg.norm(operator_sqrt(h).matrix @ fam.base.matrix, 2) ** 2
        _, bound = resolvent_lipschitz(h, fam, 3.0, 0.2, 0.0, 1.0, f)
        assert abs(bound - c * np.linalg.norm(f)) < 1e-10

    def test_random_pairs(self):
        h, fam, f = _inst(23, moving=True)
        rng = np.random.default_rng(5)
        for _ in range(50):
            t, tp = rng.uniform(-3, 3, 2)
            tau = rng.uniform(0.01, 1.0)
            gap, bound = resolvent_lipschitz(h, fam, 0.5, tau, t, tp, f)
            assert gap <= bound + 1e-8
