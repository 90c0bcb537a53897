"""Primal recovery: beamformers, power control, and achieved SINRs.

At the dual fixed point every user's multiplier matrix is singular, and the
optimal beamformer spans its null space.  Away from the fixed point the same
recipe still produces a well-defined (suboptimal) unit vector: take the
eigenvector whose eigenvalue has minimum magnitude.  With beamformers fixed,
the remaining problem is classical power control with a standard interference
map, solved either by fixed-point iteration (as the distributed protocol
does) or exactly via the linear system of active constraints.
"""

from dataclasses import replace

import numpy as np

from .hermlin import as_hermitian, normalize_phase

__all__ = [
    "PowerControlError",
    "achieved_sinr",
    "beamform",
    "beamform_all",
    "build_E",
    "gain_table",
    "power_map",
    "power_map_arrays",
    "power_solve",
    "power_solve_arrays",
    "single_cell_mode",
]

# Eigenvalues within this distance of the minimum magnitude count as tied.
TIE_TOL = 1e-12


class PowerControlError(RuntimeError):
    """Power-control iteration diverged or failed to converge.

    Divergence means the SINR targets are not achievable with the given
    beamformers and gains.
    """

    def __init__(self, message, diverged, iterations):
        super().__init__(message)
        self.diverged = diverged
        self.iterations = iterations


def build_E(s, lam, m, i):
    """Multiplier matrix of user (m, i): identity minus the weighted own-link
    term plus the full coupling sum."""
    lam = np.asarray(lam, dtype=float).reshape(-1)
    gam = float(s.gamma[m, i])
    coupled = np.einsum("u,uab->ab", lam, s.R[m].reshape(s.n_users, s.N, s.N))
    e = np.eye(s.N) - (1.0 + 1.0 / gam) * lam[s.user_index(m, i)] * s.R[m, m, i] + coupled
    return 0.5 * (e + e.conj().T)


def beamform(e, tie_tol=TIE_TOL):
    """Unit eigenvector of the eigenvalue with minimum absolute value.

    Ties within ``tie_tol`` resolve to the lowest index after sorting the
    eigenvalues ascending by value; the phase is normalized so the
    largest-magnitude component is real positive.
    """
    vals, vecs = np.linalg.eigh(as_hermitian(e))
    mags = np.abs(vals)
    k = int(np.flatnonzero(mags <= mags.min() + tie_tol)[0])
    return normalize_phase(vecs[:, k])


def beamform_all(s, lam):
    """Beamformers of all users from one multiplier vector, shape (U, N)."""
    w = np.empty((s.n_users, s.N), dtype=np.complex128)
    for m in range(s.M):
        for i in range(s.K):
            w[s.user_index(m, i)] = beamform(build_E(s, lam, m, i))
    return w


def gain_table(s, beamformers):
    """Power gains g[v, u] = w_v^H R[cell(v), m_u, i_u] w_v, shape (U, U).

    Row v is the gain of serving link v into every user u; tiny negative
    round-off is clipped to zero.
    """
    w = np.asarray(beamformers, dtype=np.complex128).reshape(s.n_users, s.N)
    g = np.empty((s.n_users, s.n_users))
    for v in range(s.n_users):
        rmats = s.R[v // s.K].reshape(s.n_users, s.N, s.N)
        g[v] = np.einsum("a,uab,b->u", w[v].conj(), rmats, w[v]).real
    return np.clip(g, 0.0, None)


def power_map_arrays(gamma, sigma2, gains, p):
    """One standard interference-map step on flat arrays."""
    gamma = np.asarray(gamma, dtype=float).reshape(-1)
    sigma2 = np.asarray(sigma2, dtype=float).reshape(-1)
    p = np.asarray(p, dtype=float).reshape(-1)
    own = np.diag(gains)
    if (own <= 0).any():
        u = int(np.flatnonzero(own <= 0)[0])
        raise ValueError(f"user {u} has zero desired-link gain")
    total = p @ gains + sigma2  # total received power at each user, own link included
    return total * (gamma / (1.0 + gamma)) / own


def power_map(s, gains, p):
    """One interference-map step for a scenario (flat user order)."""
    return power_map_arrays(s.flat_gamma, s.flat_sigma2, gains, p)


def power_solve_arrays(gamma, sigma2, gains, p0=None, tol=None, max_iter=10000,
                       divergence_factor=1e12):
    """Fixed point of the interference map by plain iteration.

    The map is standard (positive, monotone, scalable), so from any start it
    converges to the unique fixed point when one exists; the default start is
    zero.  ``tol`` is an absolute step-norm threshold; the default scales
    with the noise floor of the system.  Unbounded growth raises
    PowerControlError with ``diverged=True``.
    """
    gamma = np.asarray(gamma, dtype=float).reshape(-1)
    sigma2 = np.asarray(sigma2, dtype=float).reshape(-1)
    own = np.diag(gains)
    if (own <= 0).any():
        u = int(np.flatnonzero(own <= 0)[0])
        raise ValueError(f"user {u} has zero desired-link gain")
    if tol is None:
        tol = 1e-6 * float(sigma2.max()) / float(own.min())
    p = np.zeros_like(sigma2) if p0 is None else np.asarray(p0, dtype=float).reshape(-1)
    if (p < 0).any():
        raise ValueError("p0 must be nonnegative")

    floor = float(np.linalg.norm(sigma2 * (gamma / (1.0 + gamma)) / own))
    limit = divergence_factor * max(float(np.linalg.norm(p)), floor)
    for it in range(1, max_iter + 1):
        nxt = power_map_arrays(gamma, sigma2, gains, p)
        step = float(np.linalg.norm(nxt - p))
        p = nxt
        if step <= tol:
            return p
        if float(np.linalg.norm(p)) > limit:
            raise PowerControlError(
                f"power iteration diverged after {it} steps (targets unachievable "
                "with these beamformers)", diverged=True, iterations=it)
    raise PowerControlError(
        f"power iteration did not reach tol={tol:.3e} within {max_iter} steps",
        diverged=False, iterations=max_iter)


def power_solve(s, gains, p0=None, tol=None, max_iter=10000):
    """Fixed point of the interference map for a scenario (flat user order)."""
    return power_solve_arrays(s.flat_gamma, s.flat_sigma2, gains, p0=p0, tol=tol,
                              max_iter=max_iter)


def achieved_sinr(s, beamformers, p):
    """Mean SINR of every user under (beamformers, powers), flat user order."""
    p = np.asarray(p, dtype=float).reshape(-1)
    g = gain_table(s, beamformers)
    received = p @ g
    own = p * np.diag(g)
    interference = received - own + s.flat_sigma2
    return own / interference


def single_cell_mode(s):
    """Per-cell view of a scenario: all cross-cell coupling removed.

    Dual updates, multiplier matrices and beamforming on the view use only
    intra-cell terms, i.e. each BS plans as if alone.  Power control and
    achieved SINRs must still be evaluated against the original scenario:
    the inter-cell interference is real, just uncoordinated.
    """
    r = s.R.copy()
    for n in range(s.M):
        for m in range(s.M):
            if n != m:
                r[n, m] = 0.0
    return replace(s, R=r)
