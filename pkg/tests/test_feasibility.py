import numpy as np
import pytest
from numpy.testing import assert_allclose

from cellbeam.feasibility import (
    CouplingSystem,
    DegenerateBeamformerError,
    InfeasibleSystemError,
    build_coupling,
    is_feasible,
    k_matrix_test,
    min_power_vector,
)

from conftest import random_scenario, single_link_scenario


def symmetric_pair(gamma, cross, eta=1.0):
    return CouplingSystem(
        gain_ratio=np.array([[0.0, cross], [cross, 0.0]]),
        sinr_target=np.array([gamma, gamma]),
        noise_floor=np.array([eta, eta]),
    )


def random_coupling(rng, n, rho_scale=0.5):
    g = rng.uniform(0.0, 1.0, (n, n))
    np.fill_diagonal(g, 0.0)
    t = rng.uniform(0.05, 1.0, n)
    # rescale so the weighted radius lands near rho_scale
    cur = np.abs(np.linalg.eigvals(t[:, None] * g)).max()
    if cur > 0:
        g *= rho_scale / cur * rng.uniform(0.3, 2.0)
    return CouplingSystem(gain_ratio=g, sinr_target=t,
                          noise_floor=rng.uniform(0.1, 2.0, n))


class TestBuildCoupling:
    def test_single_user(self):
        s = single_link_scenario()
        w = np.array([[1.0 + 0j, 0.0]])
        cs = build_coupling(s, w)
        assert cs.gain_ratio.shape == (1, 1)
        assert cs.gain_ratio[0, 0] == 0.0
        assert_allclose(cs.noise_floor, [1.0 * 1e-12 / 2.0])

    def test_matches_direct_quadratic_forms(self, rng):
        s = random_scenario(rng, 2, 2, 4)
        w = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        w /= np.linalg.norm(w, axis=1, keepdims=True)
        cs = build_coupling(s, w)
        for u in range(4):
            m, i = divmod(u, 2)
            own = (w[u].conj() @ s.R[m, m, i] @ w[u]).real
            for v in range(4):
                if v == u:
                    continue
                n, j = divmod(v, 2)
                num = (w[v].conj() @ s.R[n, m, i] @ w[v]).real
                assert abs(cs.gain_ratio[u, v] - num / own) <= 1e-12 * max(1.0, num / own)

    def test_degenerate_beamformer(self):
        s = single_link_scenario(diag=(2.0, 1.0))
        s.R[0, 0, 0] = np.diag([2.0, 0.0])  # second direction carries nothing
        with pytest.raises(DegenerateBeamformerError, match=r"\(0,0\)"):
            build_coupling(s, np.array([[0.0, 1.0 + 0j]]))


class TestIsFeasible:
    def test_weak_coupling_feasible(self):
        res = is_feasible(symmetric_pair(0.1, 2.0))
        assert res.feasible and not res.marginal
        assert_allclose(res.rho, 0.2, atol=1e-12)

    def test_strong_coupling_infeasible(self):
        res = is_feasible(symmetric_pair(1.0, 2.0))
        assert not res.feasible
        assert_allclose(res.rho, 2.0, atol=1e-12)

    def test_single_user_always_feasible(self):
        cs = CouplingSystem(np.zeros((1, 1)), np.array([5.0]), np.array([1.0]))
        res = is_feasible(cs)
        assert res.feasible and res.rho == 0.0

    def test_marginal_band(self):
        res = is_feasible(symmetric_pair(1.0, 1.0))  # rho exactly 1
        assert res.marginal and not res.feasible

    def test_scaling_targets_up_never_shrinks_rho(self, rng):
        for _ in range(20):
            cs = random_coupling(rng, int(rng.integers(2, 7)))
            factor = rng.uniform(1.0, 3.0)
            scaled = CouplingSystem(cs.gain_ratio, factor * cs.sinr_target, cs.noise_floor)
            assert is_feasible(scaled).rho >= is_feasible(cs).rho - 1e-12


class TestKMatrix:
    def test_weak_pair(self):
        assert k_matrix_test(symmetric_pair(0.1, 2.0))  # minors 1 and 1 - 0.04

    def test_strong_pair(self):
        assert not k_matrix_test(symmetric_pair(1.0, 2.0))  # second minor 1 - 4

    def test_no_coupling(self):
        cs = CouplingSystem(np.zeros((3, 3)), np.ones(3), np.ones(3))
        assert k_matrix_test(cs)

    def test_agrees_with_spectral_radius(self, rng):
        for _ in range(100):
            cs = random_coupling(rng, int(rng.integers(2, 8)),
                                 rho_scale=float(rng.uniform(0.2, 1.6)))
            res = is_feasible(cs)
            if abs(res.rho - 1.0) <= 1e-9:
                continue
            assert k_matrix_test(cs) == (res.rho < 1.0)


class TestMinPower:
    def test_single_user(self):
        cs = CouplingSystem(np.zeros((1, 1)), np.array([1.0]), np.array([0.5]))
        assert_allclose(min_power_vector(cs), [0.5])

    def test_symmetric_pair_closed_form(self):
        cs = symmetric_pair(0.1, 2.0, eta=3.0)
        assert_allclose(min_power_vector(cs), [3.0 / 0.8, 3.0 / 0.8])

    def test_residual_random(self, rng):
        cs = random_coupling(rng, 6)
        p = min_power_vector(cs)
        lhs = (np.eye(6) - cs.weighted_coupling()) @ p
        assert np.linalg.norm(lhs - cs.noise_floor) <= 1e-10 * np.linalg.norm(cs.noise_floor)
        assert (p > 0).all()

    def test_infeasible_raises(self):
        with pytest.raises(InfeasibleSystemError):
            min_power_vector(symmetric_pair(1.0, 2.0))


class TestCouplingSystemValidation:
    def test_nonzero_diagonal_rejected(self):
        with pytest.raises(ValueError):
            CouplingSystem(np.eye(2), np.ones(2), np.ones(2))

    def test_negative_gain_rejected(self):
        g = np.array([[0.0, -0.1], [0.2, 0.0]])
        with pytest.raises(ValueError):
            CouplingSystem(g, np.ones(2), np.ones(2))
