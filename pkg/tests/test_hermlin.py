import numpy as np
import pytest
from numpy.testing import assert_allclose

from cellbeam import hermlin
from cellbeam.hermlin import (
    DegeneratePencilError,
    NotHermitianError,
    NotPositiveDefiniteError,
    eig_hermitian,
    is_psd,
    min_nonneg_pencil_eig,
    pencil_psd_equiv_check,
    spectral_radius_nonneg,
)

from conftest import random_hermitian, random_pd, random_psd


def grid_scan_mu_plus(a, b, mu_hat, step_rel=1e-4):
    """Independent oracle: largest mu on a fine grid keeping a - mu*b PSD."""
    step = step_rel * mu_hat
    mus = np.arange(0.0, 2.0 * mu_hat + step, step)
    stack = a[None, :, :] - mus[:, None, None] * b[None, :, :]
    smallest = np.linalg.eigvalsh(stack)[:, 0]
    scale = max(1.0, float(np.abs(np.linalg.eigvalsh(a)).max()))
    psd = smallest >= -1e-10 * scale
    if not psd[0]:
        raise AssertionError("grid scan: a itself not PSD")
    idx = np.flatnonzero(~psd)
    return mus[idx[0] - 1] if idx.size else mus[-1]


def power_iteration_radius(m, iters=2000):
    """Independent oracle for nonnegative spectral radii."""
    x = np.ones(m.shape[0])
    rho = 0.0
    for _ in range(iters):
        y = m @ x
        norm = np.linalg.norm(y)
        if norm == 0:
            return 0.0
        rho = norm / np.linalg.norm(x)
        x = y / norm
    return rho


class TestEigHermitian:
    def test_diagonal(self):
        dec = eig_hermitian(np.diag([3.0, 1.0, 2.0]))
        assert_allclose(dec.eigenvalues, [1.0, 2.0, 3.0])
        # eigenvectors are a permutation of the identity columns
        assert_allclose(np.abs(dec.eigenvectors), np.eye(3)[:, [1, 2, 0]], atol=1e-12)

    def test_classic_2x2(self):
        dec = eig_hermitian(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert_allclose(dec.eigenvalues, [1.0, 3.0], atol=1e-12)

    def test_reconstruction_random(self, rng):
        h = random_hermitian(rng, 6)
        dec = eig_hermitian(h)
        rebuilt = (dec.eigenvectors * dec.eigenvalues) @ dec.eigenvectors.conj().T
        assert np.linalg.norm(rebuilt - h) <= 1e-9 * np.linalg.norm(h)
        vhv = dec.eigenvectors.conj().T @ dec.eigenvectors
        assert np.abs(vhv - np.eye(6)).max() <= 1e-10
        assert np.all(np.diff(dec.eigenvalues) >= 0)

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitianError):
            eig_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_symmetrizes_roundoff(self):
        h = np.array([[1.0, 0.5 + 1e-14j], [0.5 - 2e-14j, 2.0]])
        out = hermlin.as_hermitian(h)
        assert np.abs(out - out.conj().T).max() == 0.0


class TestIsPsd:
    def test_identity(self):
        assert is_psd(np.eye(3))

    def test_small_negative(self):
        assert not is_psd(np.diag([1.0, -0.1]), tol=1e-9)

    def test_rejects_negative_tol(self):
        with pytest.raises(ValueError):
            is_psd(np.eye(2), tol=-1.0)


class TestPencil:
    def test_diagonal_full_rank(self):
        res = min_nonneg_pencil_eig(np.diag([2.0, 3.0]), np.eye(2))
        assert_allclose(res.mu_plus, 2.0, atol=1e-12)
        assert_allclose(np.abs(res.minimizer), [1.0, 0.0], atol=1e-12)

    def test_singular_b(self):
        res = min_nonneg_pencil_eig(np.eye(2), np.diag([1.0, 0.0]))
        assert_allclose(res.mu_plus, 1.0, atol=1e-12)
        assert_allclose(np.abs(res.minimizer), [1.0, 0.0], atol=1e-12)

    def test_matches_inverse_eigenvalues_when_b_nonsingular(self, rng):
        a = random_pd(rng, 4)
        b = random_pd(rng, 4)
        res = min_nonneg_pencil_eig(a, b)
        gen = np.linalg.eigvals(a @ np.linalg.inv(b))
        assert min(abs(gen - res.mu_plus)) <= 1e-8 * abs(res.mu_plus)

    def test_grid_scan_oracle_rank_deficient(self, rng):
        a = random_pd(rng, 5)
        b = random_psd(rng, 5, rank=3)
        res = min_nonneg_pencil_eig(a, b)
        boundary = grid_scan_mu_plus(a, b, res.mu_plus)
        assert abs(res.mu_plus - boundary) <= 1e-4 * res.mu_plus + 1e-12

    def test_variational_consistency(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 7))
            a = random_pd(rng, n)
            b = random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
            res = min_nonneg_pencil_eig(a, b)
            x = res.minimizer
            assert abs(x.conj() @ b @ x - 1.0) <= 1e-9
            assert abs(x.conj() @ a @ x - res.mu_plus) <= 1e-8 * max(1.0, res.mu_plus)
            # the pencil is singular at mu+
            sing = np.linalg.eigvalsh(a - res.mu_plus * b)
            scale = float(np.abs(np.linalg.eigvalsh(a)).max())
            assert np.abs(sing).min() <= 1e-8 * scale

    def test_b_zero_is_degenerate(self):
        with pytest.raises(DegeneratePencilError):
            min_nonneg_pencil_eig(np.eye(3), np.zeros((3, 3)))

    def test_a_not_pd_rejected(self):
        with pytest.raises(NotPositiveDefiniteError):
            min_nonneg_pencil_eig(np.diag([1.0, -1.0]), np.eye(2))

    def test_b_not_psd_rejected(self):
        with pytest.raises(ValueError):
            min_nonneg_pencil_eig(np.eye(2), np.diag([1.0, -1.0]))


class TestPencilEquivalence:
    def test_known_boundary(self):
        assert pencil_psd_equiv_check(np.diag([2.0, 3.0]), np.eye(2), 1.9)
        assert not pencil_psd_equiv_check(np.diag([2.0, 3.0]), np.eye(2), 2.1)

    def test_random_triples_agree(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 6))
            a = random_pd(rng, n)
            b = random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
            mu_plus = min_nonneg_pencil_eig(a, b).mu_plus
            mu = rng.uniform(0.0, 2.0 * mu_plus)
            if abs(mu - mu_plus) <= 1e-8 * max(1.0, mu_plus):
                continue  # boundary band
            assert pencil_psd_equiv_check(a, b, mu) == (mu <= mu_plus)

    def test_monotone_in_shifted_direction(self, rng):
        # adding more of a PSD direction to the left matrix never lowers mu+
        for _ in range(30):
            n = int(rng.integers(2, 6))
            c = random_psd(rng, n) + 0.05 * np.eye(n)
            d = random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
            b = random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
            beta, beta2 = sorted(rng.uniform(0.0, 3.0, 2))
            lo = min_nonneg_pencil_eig(c + beta * d, b).mu_plus
            hi = min_nonneg_pencil_eig(c + beta2 * d, b).mu_plus
            assert hi >= lo - 1e-10 * max(1.0, abs(lo))

    def test_eigenvalue_continuity_bound(self, rng):
        # perturbing mu by eps moves each eigenvalue of a - mu*b by at most
        # eps * ||b||_F
        a = random_pd(rng, 5)
        b = random_psd(rng, 5, rank=4)
        mu0 = 0.3
        for eps in (1e-3, 1e-5, 1e-7):
            before = np.linalg.eigvalsh(a - mu0 * b)
            after = np.linalg.eigvalsh(a - (mu0 + eps) * b)
            assert np.abs(after - before).max() <= eps * np.linalg.norm(b) + 1e-12


class TestSpectralRadius:
    def test_symmetric_pair(self):
        c = 0.7
        assert_allclose(spectral_radius_nonneg([[0.0, c], [c, 0.0]]), c, atol=1e-12)

    def test_identity(self):
        assert_allclose(spectral_radius_nonneg(np.eye(4)), 1.0)

    def test_random_matches_power_iteration(self, rng):
        m = rng.uniform(0.0, 1.0, (8, 8))
        rho = spectral_radius_nonneg(m)
        assert abs(rho - power_iteration_radius(m)) <= 1e-9 * rho

    def test_rejects_negative_entries(self):
        with pytest.raises(ValueError):
            spectral_radius_nonneg([[0.0, -1.0], [0.0, 0.0]])
