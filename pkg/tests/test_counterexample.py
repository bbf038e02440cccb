import numpy as np
import pytest
from scipy.special import expi

from zenolab.counterexample import (scalar_zeno_trajectory, subsequence_limits, v_asymptotic, v_of_t)
from zenolab.errors import BadTError, PhaseNotReachedError

# fitted once over t in [1e-4, 1e-1]; the limit as t -> 0 is sqrt(1 + (2(1 - euler_gamma)/pi)^2) ~ 1.0356
REMAINDER_C = 1.04


def imag_oracle(t):
    """Closed form of Im v through the exponential integral."""
    return -(np.exp(-t) * expi(t) - np.exp(t) * expi(-t)) / np.pi


@pytest.fixture(scope="module")
def traj():
    return scalar_zeno_trajectory(1.0, 1e2, 1e6, 50)


class TestV:
    def test_zero(self):
        assert v_of_t(0.0) == 1.0

    def test_real_part_at_one(self):
        assert abs(v_of_t(1.0).real - np.exp(-1)) <= 1e-12 * np.exp(-1) * 10

    @pytest.mark.parametrize("t", [1e-3, 0.05, 0.5, 1.0, 2.5, 7.0, 10.0, 40.0])
    def test_against_ei_oracle(self, t):
        v = v_of_t(t)
        # accuracy is relative to |v|; Re v itself is tiny for large t
        assert abs(v.real - np.exp(-t)) <= 10 * 1e-12 * abs(v)
        assert abs(v.imag - imag_oracle(t)) <= 1e-10 * abs(imag_oracle(t))

    def test_small_t_asymptote(self):
        v = v_of_t(0.01)
        expected = 2 / np.pi * 0.01 * np.log(0.01)
        assert expected == pytest.approx(-0.029317, abs=1e-6)
        assert abs(v.imag - expected) <= 0.15 * abs(v.imag)

    @pytest.mark.parametrize("t", [0.0, 0.3, 5.0, 60.0])
    def test_contraction(self, t):
        v = v_of_t(t)
        assert abs(v) <= 1
        if t > 0:
            assert abs(v) < 1

    @pytest.mark.parametrize("t", [-0.1, 100.5, np.nan])
    def test_bad_t(self, t):
        with pytest.raises(BadTError):
            v_of_t(t)

    def test_rel_tol_floor(self):
        with pytest.raises(ValueError):
            v_of_t(1.0, rel_tol=1e-14)


class TestAsymptote:
    def test_inverse_e(self):
        assert abs(v_asymptotic(np.exp(-1)) - (1 - 2j / (np.pi * np.e))) < 1e-15

    def test_tenth(self):
        direct = 1 + 2j / np.pi * 0.1 * np.log(0.1)
        assert abs(v_asymptotic(0.1) - direct) < 1e-15
        assert direct.imag == pytest.approx(-0.1465871, abs=1e-7)

    @pytest.mark.parametrize("t", np.geomspace(1e-4, 1e-1, 7))
    def test_remainder_linear_in_t(self, t):
        assert abs(v_of_t(t) - v_asymptotic(t)) <= REMAINDER_C * t

    @pytest.mark.parametrize("t", [0.0, 1.0, 2.0])
    def test_domain(self, t):
        with pytest.raises(BadTError):
            v_asymptotic(t)


class TestTrajectory:
    def test_contraction(self, traj):
        assert np.all(traj.modulus <= 1 + 1e-9)

    def test_unwrapped_continuity(self, traj):
        assert np.max(np.abs(np.diff(traj.unwrapped_phase))) < np.pi

    def test_winding_matches_asymptote(self, traj):
        predicted = 2 / np.pi * np.log(1e4)
        assert predicted == pytest.approx(5.86, abs=0.01)
        assert abs(traj.winding - predicted) < 0.05

    def test_modulus_smooth_and_bounded(self, traj):
        assert 0.1 <= traj.modulus.min() and traj.modulus.max() <= 1
        # the modulus tends to exp(-t) monotonically while the phase keeps turning
        assert np.all(np.diff(traj.modulus) < 0)
        assert traj.modulus[-1] == pytest.approx(np.exp(-1), rel=1e-4)

    def test_t_zero_value(self):
        assert v_of_t(0.0) ** 1e5 == 1

    def test_bad_range(self):
        with pytest.raises(ValueError):
            scalar_zeno_trajectory(1.0, 5, 1e3)
        with pytest.raises(ValueError):
            scalar_zeno_trajectory(1.0, 1e2, 1e8)


class TestSubsequences:
    def test_opposite_phases_give_distinct_points(self, traj):
        p0 = traj.unwrapped_phase[0]
        nus = subsequence_limits(traj, [p0 - 1.0, p0 - 1.0 - np.pi])
        vals = [traj.values[np.searchsorted(traj.nu, nu)] for nu in nus]
        assert abs(vals[0] - vals[1]) >= 0.5

    def test_empty(self, traj):
        assert subsequence_limits(traj, []) == []

    def test_initial_phase(self, traj):
        assert subsequence_limits(traj, [traj.unwrapped_phase[0]]) == [traj.nu[0]]

    def test_unreached_phase(self, traj):
        # the phase sweeps less than a full turn on this range, leaving a gap just above the start
        with pytest.raises(PhaseNotReachedError):
            subsequence_limits(traj, [traj.unwrapped_phase[0] + 0.25])
