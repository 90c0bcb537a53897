"""Dual fixed-point machinery.

The dual of the power-minimization problem maximizes the noise-weighted sum
of per-user multipliers subject to one linear matrix inequality per user.
Each inequality caps a user's multiplier by the minimum nonnegative pencil
eigenvalue of (scaled identity-plus-coupling, own-link correlation), which
turns the dual into a componentwise fixed-point problem for the map J.  J is
positive, monotone and scalable, so iterating it converges to the unique
fixed point from any nonnegative start, synchronously or asynchronously.
"""

from dataclasses import dataclass

import numpy as np

from . import backend, hermlin

__all__ = [
    "DualSolveReport",
    "DualWorkspace",
    "classify_start",
    "constraint_matrix",
    "constraint_slack",
    "constraint_slacks",
    "dual_map",
    "dual_map_component",
    "dual_objective",
    "sync_solve",
]

# Euclidean step norm below which the iteration is declared converged.
DEFAULT_TOL = 1e-5
DEFAULT_MAX_ITER = 10000
# Slack this negative marks a start as violating the dual constraints.
START_SLACK_TOL = 1e-8


class DualWorkspace:
    """Precomputed per-scenario arrays for fast dual-map sweeps.

    The heavy per-user work of one map evaluation is a pencil eigenvalue
    against the user's own-link correlation, whose range/null split never
    changes; it is factored once here.  ``intra_cell_only`` zeroes all
    cross-cell coupling so each cell solves its local problem in isolation
    (the single-cell baseline).
    """

    def __init__(self, scenario, intra_cell_only=False, rank_tol=hermlin.RANK_TOL):
        s = scenario
        u_count = s.n_users
        n = s.N
        rmats = np.empty((s.M, u_count, n, n), dtype=np.complex128)
        for m in range(s.M):
            rmats[m] = s.R[m].reshape(u_count, n, n)
            if intra_cell_only:
                rmats[m, : m * s.K] = 0.0
                rmats[m, (m + 1) * s.K:] = 0.0

        bases = np.empty((u_count, n, n), dtype=np.complex128)
        ranks = np.empty(u_count, dtype=np.int64)
        for u in range(u_count):
            m, i = s.user_label(u)
            vals, vecs = np.linalg.eigh(hermlin.as_hermitian(s.R[m, m, i]))
            top = float(vals[-1])
            keep = vals > rank_tol * max(top, 0.0)
            if not keep.any():
                raise hermlin.DegeneratePencilError(
                    f"own-link correlation of user ({m},{i}) is numerically zero"
                )
            r = int(keep.sum())
            bases[u, :, :r] = vecs[:, keep] / np.sqrt(vals[keep])
            bases[u, :, r:] = vecs[:, ~keep]
            ranks[u] = r

        gam = s.flat_gamma
        self.scenario = s
        self.intra_cell_only = bool(intra_cell_only)
        self.rmats = rmats
        self.bases = bases
        self.ranks = ranks
        self.cell = np.repeat(np.arange(s.M, dtype=np.int64), s.K)
        self.cfac = np.ascontiguousarray(gam / (1.0 + gam))
        self._full_mask = np.ones(u_count, dtype=np.uint8)

    @property
    def n_users(self):
        return self.rmats.shape[1]

    def dual_map(self, lam, mask=None, out=None):
        """Apply the fixed-point map; entries outside ``mask`` keep ``out``."""
        lam = np.ascontiguousarray(lam, dtype=np.float64)
        if lam.shape != (self.n_users,):
            raise ValueError(f"lambda must have shape ({self.n_users},)")
        if (lam < 0).any():
            raise ValueError("dual variables must be nonnegative")
        if mask is None:
            mask = self._full_mask
        if out is None:
            out = lam.copy()
        backend.dual_map_sweep(
            self.rmats, self.bases, self.ranks, self.cell, self.cfac, lam, mask, out
        )
        return out


@dataclass
class DualSolveReport:
    lambda_star: np.ndarray
    iterations: int
    residual: float
    converged: bool
    objective: float
    constraint_slacks: np.ndarray
    start_class: str  # "nondecreasing" | "nonincreasing" | "mixed" | "fixed-point"


def _workspace(scenario_or_ws, **kwargs):
    if isinstance(scenario_or_ws, DualWorkspace):
        return scenario_or_ws
    return DualWorkspace(scenario_or_ws, **kwargs)


def dual_map_component(s, lam, m, i):
    """Single map entry via the generic pencil solver (reference path)."""
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if (lam < 0).any():
        raise ValueError("dual variables must be nonnegative")
    gam = float(s.gamma[m, i])
    coupled = np.eye(s.N) + np.einsum("u,uab->ab", lam, s.R[m].reshape(s.n_users, s.N, s.N))
    a = (gam / (1.0 + gam)) * coupled
    return hermlin.min_nonneg_pencil_eig(a, s.R[m, m, i]).mu_plus


def dual_map(scenario_or_ws, lam):
    """Vector fixed-point map over all users."""
    return _workspace(scenario_or_ws).dual_map(lam)


def dual_objective(s, lam):
    """Noise-weighted sum of multipliers (the dual objective value)."""
    lam = np.asarray(lam, dtype=float).reshape(-1)
    return float(lam @ s.flat_sigma2)


def constraint_matrix(s, lam, m, i):
    """Hermitian matrix whose PSD-ness is user (m, i)'s dual constraint."""
    lam = np.asarray(lam, dtype=float).reshape(-1)
    gam = float(s.gamma[m, i])
    coupled = np.eye(s.N) + np.einsum("u,uab->ab", lam, s.R[m].reshape(s.n_users, s.N, s.N))
    return (gam / (1.0 + gam)) * coupled - lam[s.user_index(m, i)] * s.R[m, m, i]


def constraint_slack(s, lam, m, i):
    """Smallest eigenvalue of the user's dual constraint matrix.

    Positive inside the feasible region, zero when the constraint is active
    (which all are at the fixed point), negative beyond it.
    """
    mat = hermlin.as_hermitian(constraint_matrix(s, lam, m, i))
    return float(np.linalg.eigvalsh(mat)[0])


def constraint_slacks(s, lam):
    """All users' constraint slacks, flat user order."""
    return np.array(
        [constraint_slack(s, lam, m, i) for m in range(s.M) for i in range(s.K)]
    )


def classify_start(scenario_or_ws, lam0):
    """Monotonicity class of the trajectory started at lam0.

    "nondecreasing" when lam0 <= J(lam0) componentwise, "nonincreasing" when
    lam0 >= J(lam0), "fixed-point" when both, otherwise "mixed".
    """
    ws = _workspace(scenario_or_ws)
    lam0 = np.asarray(lam0, dtype=float).reshape(-1)
    first = ws.dual_map(lam0)
    scale = max(1.0, float(np.abs(first).max()))
    up = bool(np.all(lam0 <= first + 1e-12 * scale))
    down = bool(np.all(lam0 >= first - 1e-12 * scale))
    if up and down:
        return "fixed-point"
    if up:
        return "nondecreasing"
    if down:
        return "nonincreasing"
    return "mixed"


def sync_solve(scenario_or_ws, lam0=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
               strict_start=False, divergence_limit=1e18):
    """Iterate lam <- J(lam) until the step norm drops below ``tol``.

    Any nonnegative start converges to the unique fixed point when the
    underlying problem is feasible; ``lam0 = None`` starts at zero, which
    always yields a componentwise nondecreasing trajectory.  With
    ``strict_start`` a nonzero start must also satisfy the dual constraints
    (all slacks >= -1e-8) or it is rejected.  Non-convergence within
    ``max_iter`` (or blow-up past ``divergence_limit``) is reported through
    the ``converged`` flag, not raised: it is the expected outcome for an
    infeasible problem.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    ws = _workspace(scenario_or_ws)
    s = ws.scenario
    if lam0 is None:
        lam = np.zeros(ws.n_users)
    else:
        lam = np.ascontiguousarray(lam0, dtype=float).reshape(-1)
        if lam.shape != (ws.n_users,):
            raise ValueError(f"lam0 must have shape ({ws.n_users},)")
        if (lam < 0).any():
            raise ValueError("lam0 must be nonnegative")
        if strict_start and lam.any():
            slacks = constraint_slacks(s, lam)
            if slacks.min() < -START_SLACK_TOL:
                raise ValueError(
                    f"initial point violates the dual constraints (min slack {slacks.min():.3e})"
                )

    start_class = classify_start(ws, lam)
    converged = False
    residual = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        nxt = ws.dual_map(lam)
        residual = float(np.linalg.norm(nxt - lam))
        lam = nxt
        if residual <= tol:
            converged = True
            break
        if not np.isfinite(residual) or lam.max() > divergence_limit:
            break

    return DualSolveReport(
        lambda_star=lam,
        iterations=iterations,
        residual=residual,
        converged=converged,
        objective=dual_objective(s, lam),
        constraint_slacks=constraint_slacks(s, lam),
        start_class=start_class,
    )
