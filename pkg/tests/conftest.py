import numpy as np
import pytest

from cellbeam.channel import LayoutSpec, Scenario, generate_scenario


def random_hermitian(rng, n, scale=1.0):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (a + a.conj().T)


def random_psd(rng, n, rank=None, scale=1.0):
    rank = n if rank is None else rank
    f = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return scale * (f @ f.conj().T)


def random_pd(rng, n, scale=1.0):
    return random_psd(rng, n, scale=scale) + 0.1 * scale * np.eye(n)


def random_scenario(rng, m_cells, users, antennas, gamma_scale=0.2, noise=1e-3,
                    cross_scale=0.05):
    """Hand-built scenario with random PSD links (rank >= 2 everywhere).

    Cross-cell links are weaker than own-cell links so the drawn target set
    is usually feasible.
    """
    r = np.empty((m_cells, m_cells, users, antennas, antennas), dtype=np.complex128)
    for n in range(m_cells):
        for m in range(m_cells):
            for i in range(users):
                rank = int(rng.integers(2, antennas + 1))
                scale = 1.0 if n == m else cross_scale
                r[n, m, i] = random_psd(rng, antennas, rank=rank, scale=scale)
    gamma = rng.uniform(0.5 * gamma_scale, gamma_scale, (m_cells, users))
    sigma2 = np.full((m_cells, users), noise)
    return Scenario(M=m_cells, K=users, N=antennas, R=r, sigma2=sigma2, gamma=gamma)


def single_link_scenario(diag=(2.0, 1.0), gamma=1.0, sigma2=1e-12):
    n = len(diag)
    r = np.zeros((1, 1, 1, n, n), dtype=np.complex128)
    r[0, 0, 0] = np.diag(diag)
    return Scenario(M=1, K=1, N=n, R=r, sigma2=[[sigma2]], gamma=[[gamma]])


@pytest.fixture(scope="session")
def two_cell_scenario():
    return generate_scenario(LayoutSpec("two-cell-line"), 2, 2, 4, 0.1, 1e-12, seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
