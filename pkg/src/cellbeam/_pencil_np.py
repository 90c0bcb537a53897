"""Pure-NumPy dual-update sweep (fallback backend).

Same contract as the compiled extension ``cellbeam._pencil``: one call
evaluates the dual fixed-point map for every selected user against a
precomputed workspace.  See ``cellbeam.dualsolve.DualWorkspace`` for the
array layout.
"""

import numpy as np

COMPILED = False


def dual_map_sweep(rmats, bases, ranks, cell, cfac, lam, mask, out):
    """Write cfac[u] * mu_plus(I + sum_v lam[v] rmats[m_u, v], own link of u)
    into out[u] for every u with mask[u] != 0; other entries are untouched.

    rmats : (M, U, N, N) complex, coupling matrices seen from each BS
    bases : (U, N, N) complex, per user: whitened range basis of the own-link
        correlation in the first ranks[u] columns, orthonormal null basis in
        the rest
    ranks : (U,) int64, cell : (U,) int64, cfac : (U,) float, lam : (U,) float
    mask  : (U,) uint8, out : (U,) float
    """
    n_cells, n_users, n = rmats.shape[0], rmats.shape[1], rmats.shape[2]
    eye = np.eye(n, dtype=np.complex128)
    for m in range(n_cells):
        users = [u for u in range(n_users) if cell[u] == m and mask[u]]
        if not users:
            continue
        f = eye + np.einsum("u,uab->ab", lam, rmats[m])
        for u in users:
            q = bases[u]
            g = q.conj().T @ f @ q
            r = int(ranks[u])
            if r < n:
                x = np.linalg.solve(g[r:, r:], g[r:, :r])
                schur = g[:r, :r] - g[:r, r:] @ x
            else:
                schur = g
            schur = 0.5 * (schur + schur.conj().T)
            out[u] = cfac[u] * np.linalg.eigvalsh(schur)[0]
    return out
