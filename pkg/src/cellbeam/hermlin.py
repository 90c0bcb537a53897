"""Dense complex Hermitian linear algebra for small matrices.

Eigendecompositions, positive-semidefiniteness tests, spectral radii of
nonnegative matrices, and the minimum nonnegative eigenvalue of a definite
matrix pencil A - mu*B (A Hermitian positive definite, B Hermitian PSD,
B nonzero).  All functions are pure and operate on plain ndarrays; matrix
sizes in this package stay small (N <= ~16), so everything is dense.
"""

from typing import NamedTuple

import numpy as np

__all__ = [
    "DegeneratePencilError",
    "EigenDecomposition",
    "NotHermitianError",
    "NotPositiveDefiniteError",
    "PencilEigenResult",
    "as_hermitian",
    "eig_hermitian",
    "is_psd",
    "min_nonneg_pencil_eig",
    "normalize_phase",
    "pencil_psd_equiv_check",
    "spectral_radius_nonneg",
]

# Relative asymmetry allowed before an input is rejected as non-Hermitian.
ASYM_TOL = 1e-12
# Relative cutoff separating the numerical range of B from its null space.
RANK_TOL = 1e-10
# Default slack for PSD decisions.
PSD_TOL = 1e-9


class NotHermitianError(ValueError):
    """Input matrix is not Hermitian within tolerance."""


class NotPositiveDefiniteError(ValueError):
    """Pencil matrix A must be positive definite."""


class DegeneratePencilError(ValueError):
    """Pencil matrix B is (numerically) zero; the constraint set is empty."""


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # real, ascending
    eigenvectors: np.ndarray  # unitary, eigenvectors as columns


class PencilEigenResult(NamedTuple):
    mu_plus: float
    minimizer: np.ndarray  # x with x^H B x = 1 attaining min x^H A x


def as_hermitian(h, tol=ASYM_TOL):
    """Validate a square near-Hermitian matrix and return (h + h^H)/2.

    Averaging absorbs round-off introduced by upstream arithmetic; inputs
    whose asymmetry exceeds ``tol`` times their magnitude are rejected.
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {h.shape}")
    scale = max(1.0, float(np.abs(h).max()) if h.size else 0.0)
    asym = float(np.abs(h - h.conj().T).max()) if h.size else 0.0
    if asym > tol * scale:
        raise NotHermitianError(
            f"matrix is not Hermitian: asymmetry {asym:.3e} exceeds {tol:.1e}*{scale:.3e}"
        )
    return 0.5 * (h + h.conj().T)


def normalize_phase(v):
    """Rotate a complex vector so its largest-magnitude entry is real positive.

    Ties in magnitude resolve to the lowest index, making the result a
    deterministic representative of the ray {e^{j phi} v}.
    """
    v = np.asarray(v, dtype=np.complex128)
    k = int(np.argmax(np.abs(v)))
    pivot = v[k]
    if pivot == 0:
        return v.copy()
    return v * (pivot.conjugate() / abs(pivot))


def eig_hermitian(h):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    vals, vecs = np.linalg.eigh(as_hermitian(h))
    return EigenDecomposition(vals, vecs)


def is_psd(h, tol=PSD_TOL):
    """True iff the smallest eigenvalue of h is >= -tol * max(1, ||h||)."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    vals = np.linalg.eigvalsh(as_hermitian(h))
    scale = max(1.0, abs(float(vals[0])), abs(float(vals[-1])))
    return bool(vals[0] >= -tol * scale)


def min_nonneg_pencil_eig(a, b, rank_tol=RANK_TOL):
    """Minimum nonnegative eigenvalue mu+ of the pencil a - mu*b.

    Requires ``a`` Hermitian positive definite and ``b`` Hermitian PSD with
    at least one eigenvalue above ``rank_tol`` times its largest.  Computed
    from the variational form

        mu+ = min { x^H a x : x^H b x = 1 },

    by whitening the range of ``b`` and minimizing the Schur complement of
    ``a`` onto it; the null-range component of the minimizer is filled in
    with the a-optimal completion.  For every 0 <= mu <= mu+ the matrix
    a - mu*b is PSD, and a - mu+*b is singular.

    Returns
    -------
    PencilEigenResult
        ``mu_plus`` and the attaining unit-constraint vector ``minimizer``.
    """
    a = as_hermitian(a)
    b = as_hermitian(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")

    a_min = float(np.linalg.eigvalsh(a)[0])
    if a_min <= 0:
        raise NotPositiveDefiniteError(
            f"pencil matrix A must be positive definite (min eigenvalue {a_min:.3e})"
        )

    b_vals, b_vecs = np.linalg.eigh(b)
    b_max = float(b_vals[-1])
    if b_vals[0] < -PSD_TOL * max(1.0, abs(b_max)):
        raise ValueError(f"pencil matrix B must be PSD (min eigenvalue {b_vals[0]:.3e})")
    keep = b_vals > rank_tol * max(b_max, 0.0)
    if not keep.any():
        raise DegeneratePencilError(
            "pencil matrix B is numerically zero; no x satisfies x^H B x = 1"
        )

    white = b_vecs[:, keep] / np.sqrt(b_vals[keep])  # N x r, maps unit ball onto range of B
    a11 = white.conj().T @ a @ white
    null_basis = b_vecs[:, ~keep]
    if null_basis.shape[1]:
        a12 = white.conj().T @ a @ null_basis
        a22 = null_basis.conj().T @ a @ null_basis
        x22 = np.linalg.solve(a22, a12.conj().T)  # q x r
        schur = a11 - a12 @ x22
    else:
        x22 = None
        schur = a11
    schur = 0.5 * (schur + schur.conj().T)

    vals, vecs = np.linalg.eigh(schur)
    mu = float(vals[0])
    y = vecs[:, 0]
    x = white @ y
    if x22 is not None:
        x = x - null_basis @ (x22 @ y)
    return PencilEigenResult(mu, normalize_phase(x))


def pencil_psd_equiv_check(a, b, mu, tol=1e-8):
    """True iff a - mu*b is PSD; equals (mu <= mu+) away from the boundary."""
    a = as_hermitian(a)
    b = as_hermitian(b)
    return is_psd(a - mu * b, tol)


def spectral_radius_nonneg(m):
    """Spectral radius of an entrywise-nonnegative real matrix."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.size and float(m.min()) < 0:
        raise ValueError("matrix has negative entries")
    return float(np.abs(np.linalg.eigvals(m)).max())
