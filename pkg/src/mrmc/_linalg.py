"""Small shared linear-algebra helpers for complex Hermitian matrices."""

import numpy as np

# Ridge added before a retried factorization/inverse when the plain one fails
# or is too ill-conditioned.
RIDGE = 1e-10
COND_LIMIT = 1e12


def herm(M):
    """Conjugate transpose."""
    return M.conj().T


def hermitize(M):
    """Force exact Hermitian symmetry, (M + M^H)/2."""
    return 0.5 * (M + M.conj().T)


def logdet_psd(M):
    """log|M| of a Hermitian PD matrix via Cholesky.

    On factorization failure a single 1e-10*I regularized retry is made;
    if that also fails a LinAlgError propagates.
    """
    M = np.asarray(M)
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        L = np.linalg.cholesky(M + RIDGE * np.eye(M.shape[0]))
    return 2.0 * float(np.sum(np.log(np.real(np.diag(L)))))


def solve_psd(M, B):
    """Solve M X = B for Hermitian PD M, with one regularized retry."""
    try:
        if np.linalg.cond(M) > COND_LIMIT:
            M = M + RIDGE * np.eye(M.shape[0])
        return np.linalg.solve(M, B)
    except np.linalg.LinAlgError:
        return np.linalg.solve(M + RIDGE * np.eye(M.shape[0]), B)


def inv_psd(M):
    """Inverse of a Hermitian PD matrix, with one regularized retry."""
    return solve_psd(M, np.eye(M.shape[0], dtype=complex))


def eigh_psd(M, floor=0.0):
    """Eigendecomposition of a Hermitian matrix with eigenvalues clipped at `floor`."""
    w, V = np.linalg.eigh(hermitize(M))
    return np.maximum(w, floor), V


def sqrt_inv_psd(M):
    """Hermitian inverse square root M^{-1/2}."""
    w, V = eigh_psd(M)
    if w.min() <= 0:
        w = w + RIDGE
    return (V * (1.0 / np.sqrt(w))) @ V.conj().T


def logpdet(M, rtol=1e-12):
    """log pseudo-determinant (product of eigenvalues above a relative cutoff)."""
    w, _ = eigh_psd(M)
    cutoff = max(w.max(), 0.0) * rtol * M.shape[0]
    kept = w[w > cutoff]
    return float(np.sum(np.log(kept))), kept.size


def min_eig(M):
    """Smallest eigenvalue of a Hermitian matrix."""
    return float(np.linalg.eigvalsh(hermitize(M)).min())


def rand_cn(rng, shape, var=1.0):
    """i.i.d. circularly symmetric complex Gaussian entries, CN(0, var)."""
    s = np.sqrt(var / 2.0)
    return rng.normal(0.0, s, shape) + 1j * rng.normal(0.0, s, shape)
