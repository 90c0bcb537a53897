# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled dual-update sweep.

Hot kernel behind ``cellbeam.dualsolve.DualWorkspace``: evaluates the dual
fixed-point map for all selected users of a workspace in one call, using
LAPACK/BLAS directly on small column-major scratch buffers.  The pure-Python
twin lives in ``cellbeam._pencil_np``.
"""

import numpy as np

from scipy.linalg.cython_blas cimport zgemm
from scipy.linalg.cython_lapack cimport zheev, zposv

ctypedef double complex zcomplex

COMPILED = True


def dual_map_sweep(zcomplex[:, :, :, ::1] rmats,
                   zcomplex[:, :, ::1] bases,
                   long long[::1] ranks,
                   long long[::1] cell,
                   double[::1] cfac,
                   double[::1] lam,
                   unsigned char[::1] mask,
                   double[::1] out):
    """Same contract as cellbeam._pencil_np.dual_map_sweep."""
    cdef int n_cells = rmats.shape[0]
    cdef int n_users = rmats.shape[1]
    cdef int n = rmats.shape[2]
    cdef int m, u, i, j, r, q, info
    cdef int lwork = 4 * n if n > 0 else 1
    cdef double lam_u
    cdef bint any_user

    f_arr = np.empty(n * n, dtype=np.complex128)
    q_arr = np.empty(n * n, dtype=np.complex128)
    t_arr = np.empty(n * n, dtype=np.complex128)
    g_arr = np.empty(n * n, dtype=np.complex128)
    s_arr = np.empty(n * n, dtype=np.complex128)
    a21_arr = np.empty(n * n, dtype=np.complex128)
    a22_arr = np.empty(n * n, dtype=np.complex128)
    w_arr = np.empty(max(1, n), dtype=np.float64)
    work_arr = np.empty(lwork, dtype=np.complex128)
    rwork_arr = np.empty(max(1, 3 * n - 2), dtype=np.float64)

    cdef zcomplex[::1] F = f_arr
    cdef zcomplex[::1] Q = q_arr
    cdef zcomplex[::1] T = t_arr
    cdef zcomplex[::1] G = g_arr
    cdef zcomplex[::1] S = s_arr
    cdef zcomplex[::1] A21 = a21_arr
    cdef zcomplex[::1] A22 = a22_arr
    cdef double[::1] W = w_arr
    cdef zcomplex[::1] WORK = work_arr
    cdef double[::1] RWORK = rwork_arr

    cdef zcomplex zone = 1.0
    cdef zcomplex zzero = 0.0
    cdef zcomplex zmone = -1.0

    for m in range(n_cells):
        any_user = False
        for u in range(n_users):
            if cell[u] == m and mask[u]:
                any_user = True
                break
        if not any_user:
            continue

        # F = I + sum_u lam[u] * rmats[m, u], stored column-major
        for j in range(n):
            for i in range(n):
                F[i + j * n] = 0.0
            F[j + j * n] = 1.0
        for u in range(n_users):
            lam_u = lam[u]
            if lam_u == 0.0:
                continue
            for j in range(n):
                for i in range(n):
                    F[i + j * n] = F[i + j * n] + lam_u * rmats[m, u, i, j]

        for u in range(n_users):
            if cell[u] != m or not mask[u]:
                continue
            for j in range(n):
                for i in range(n):
                    Q[i + j * n] = bases[u, i, j]
            # G = Q^H (F Q)
            zgemm(b"N", b"N", &n, &n, &n, &zone, &F[0], &n, &Q[0], &n, &zzero, &T[0], &n)
            zgemm(b"C", b"N", &n, &n, &n, &zone, &Q[0], &n, &T[0], &n, &zzero, &G[0], &n)

            r = <int> ranks[u]
            q = n - r
            if q > 0:
                for j in range(q):
                    for i in range(q):
                        A22[i + j * q] = G[(r + i) + (r + j) * n]
                for j in range(r):
                    for i in range(q):
                        A21[i + j * q] = G[(r + i) + j * n]
                # X = A22^{-1} A21 overwrites A21 (A22 is PD: null-range block of a PD matrix)
                zposv(b"L", &q, &r, &A22[0], &q, &A21[0], &q, &info)
                if info != 0:
                    raise np.linalg.LinAlgError(
                        f"null-range block solve failed for user {u} (info={info})")
                for j in range(r):
                    for i in range(r):
                        S[i + j * r] = G[i + j * n]
                for j in range(q):
                    for i in range(r):
                        T[i + j * r] = G[i + (r + j) * n]  # A12 block
                zgemm(b"N", b"N", &r, &r, &q, &zmone, &T[0], &r, &A21[0], &q, &zone, &S[0], &r)
            else:
                for j in range(r):
                    for i in range(r):
                        S[i + j * r] = G[i + j * n]

            zheev(b"N", b"L", &r, &S[0], &r, &W[0], &WORK[0], &lwork, &RWORK[0], &info)
            if info != 0:
                raise np.linalg.LinAlgError(
                    f"eigenvalue computation failed for user {u} (info={info})")
            out[u] = cfac[u] * W[0]
    return np.asarray(out)
