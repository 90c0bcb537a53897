"""Feasibility of the SINR targets for a fixed beamformer set.

For given beamformers the per-user SINR constraints collapse to a linear
system ``(I - diag(targets) @ G) p >= eta`` over the power vector, where G
holds normalized cross-gain ratios and eta the noise-driven lower bounds.
The targets are jointly achievable iff the spectral radius of
``diag(targets) @ G`` is below one, equivalently iff ``I - diag(targets) @ G``
is a K-matrix; the componentwise-minimal achieving power vector is the
solution of the active system.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .hermlin import spectral_radius_nonneg

__all__ = [
    "CouplingSystem",
    "DegenerateBeamformerError",
    "FeasibilityResult",
    "InfeasibleSystemError",
    "build_coupling",
    "is_feasible",
    "k_matrix_test",
    "min_power_vector",
]

# Spectral radii this close to 1 are reported infeasible with the marginal flag.
MARGIN_TOL = 1e-9


class DegenerateBeamformerError(ValueError):
    """A beamformer has (numerically) zero gain on its own desired link."""


class InfeasibleSystemError(ValueError):
    """No power vector can meet the SINR targets for this coupling system."""


@dataclass(frozen=True)
class CouplingSystem:
    """Linear power-control data induced by a (scenario, beamformers) pair.

    ``gain_ratio[u, v]`` is the interference gain from the serving link of
    user v into user u, normalized by u's own desired-link gain (zero on the
    diagonal).  ``noise_floor[u]`` is the power user u would need with zero
    interference.
    """

    gain_ratio: np.ndarray  # (U, U) nonnegative, zero diagonal
    sinr_target: np.ndarray  # (U,) positive
    noise_floor: np.ndarray  # (U,) positive, W

    def __post_init__(self):
        g = np.asarray(self.gain_ratio, dtype=float)
        t = np.asarray(self.sinr_target, dtype=float)
        e = np.asarray(self.noise_floor, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] != t.size or t.size != e.size:
            raise ValueError("inconsistent coupling-system shapes")
        if (g < 0).any():
            raise ValueError("gain ratios must be nonnegative")
        if np.abs(np.diag(g)).max(initial=0.0) != 0.0:
            raise ValueError("gain_ratio must have a zero diagonal")
        if (t <= 0).any() or (e <= 0).any():
            raise ValueError("targets and noise floors must be positive")
        object.__setattr__(self, "gain_ratio", g)
        object.__setattr__(self, "sinr_target", t)
        object.__setattr__(self, "noise_floor", e)

    @property
    def n_users(self):
        return self.sinr_target.size

    def weighted_coupling(self):
        """diag(sinr_target) @ gain_ratio."""
        return self.sinr_target[:, None] * self.gain_ratio


class FeasibilityResult(NamedTuple):
    feasible: bool
    rho: float
    marginal: bool


def build_coupling(scenario, beamformers):
    """Coupling system for unit-norm per-user beamformers, shape (U, N)."""
    s = scenario
    w = np.asarray(beamformers, dtype=np.complex128).reshape(s.n_users, s.N)
    u_count = s.n_users

    # quad[v, u] = w_v^H R[cell(v), m_u, i_u] w_v, the gain of link v at user u
    quad = np.empty((u_count, u_count))
    for v in range(u_count):
        n_v = v // s.K
        rmats = s.R[n_v].reshape(u_count, s.N, s.N)
        quad[v] = np.einsum("a,uab,b->u", w[v].conj(), rmats, w[v]).real
    quad = np.clip(quad, 0.0, None)

    own = np.diag(quad).copy()
    bad = own <= 0
    if bad.any():
        u = int(np.flatnonzero(bad)[0])
        m, i = s.user_label(u)
        raise DegenerateBeamformerError(
            f"beamformer of user ({m},{i}) has zero desired-link gain"
        )

    g = quad.T / own[:, None]  # row u: interference ratios into user u
    np.fill_diagonal(g, 0.0)
    eta = s.flat_gamma * s.flat_sigma2 / own
    return CouplingSystem(gain_ratio=g, sinr_target=s.flat_gamma.copy(), noise_floor=eta)


def is_feasible(cs):
    """Spectral-radius test: targets achievable iff rho(diag(t) G) < 1.

    Radii within MARGIN_TOL of 1 are reported infeasible with the marginal
    flag set.
    """
    rho = spectral_radius_nonneg(cs.weighted_coupling())
    marginal = abs(rho - 1.0) <= MARGIN_TOL
    return FeasibilityResult(feasible=bool(rho < 1.0 and not marginal), rho=rho, marginal=marginal)


def k_matrix_test(cs):
    """True iff I - diag(t) G is a K-matrix.

    The matrix is a Z-matrix by construction (nonpositive off-diagonals), so
    it is a K-matrix iff all leading principal minors are positive.
    """
    a = np.eye(cs.n_users) - cs.weighted_coupling()
    for k in range(1, cs.n_users + 1):
        if np.linalg.det(a[:k, :k]) <= 0:
            return False
    return True


def min_power_vector(cs):
    """Componentwise-minimal power vector meeting all targets with equality."""
    res = is_feasible(cs)
    if not res.feasible:
        raise InfeasibleSystemError(
            f"coupling system is infeasible (rho = {res.rho:.6g})"
        )
    a = np.eye(cs.n_users) - cs.weighted_coupling()
    p = np.linalg.solve(a, cs.noise_floor)
    return p
