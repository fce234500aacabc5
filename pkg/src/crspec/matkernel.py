"""Dense complex linear-algebra primitives shared by the solvers.

All routines return factors with a deterministic column phase: the first
entry of each singular/eigenvector whose magnitude is non-negligible is made
real and positive. Matrices in this package are small (at most ~16x16), so
everything is a thin layer over :mod:`numpy.linalg`.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SvdFactors",
    "svd",
    "herm_eig",
    "null_projector",
    "inv_sqrt_psd",
    "RANK_RTOL",
]

#: singular values below ``RANK_RTOL * sigma_max`` are treated as zero
RANK_RTOL = 1e-12


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``M = Q diag(sqrt(lam)) U^H`` restricted to positive singular values.

    Attributes
    ----------
    Q : ndarray, shape (m, r)
        Left singular vectors (orthonormal columns).
    lam : ndarray, shape (r,)
        Squared singular values, nonincreasing and strictly positive.
    U : ndarray, shape (n, r)
        Right singular vectors (orthonormal columns).
    """

    Q: np.ndarray
    lam: np.ndarray
    U: np.ndarray

    @property
    def rank(self):
        return self.lam.size

    def reconstruct(self):
        return (self.Q * np.sqrt(self.lam)) @ self.U.conj().T


def _phase_fix(V, tol=1e-10):
    """Return the unit phases that make each column's leading entry real positive."""
    V = np.asarray(V)
    if V.size == 0:
        return np.ones(V.shape[-1], dtype=complex)
    mags = np.abs(V)
    col_max = mags.max(axis=0, keepdims=True)
    lead = np.argmax(mags > tol * np.maximum(col_max, np.finfo(float).tiny), axis=0)
    entry = V[lead, np.arange(V.shape[1])]
    ph = np.ones(V.shape[1], dtype=complex)
    nz = np.abs(entry) > 0
    ph[nz] = np.abs(entry[nz]) / entry[nz]
    return ph


def svd(M):
    """Thin SVD with rank truncation and a deterministic phase convention.

    Singular values below ``RANK_RTOL`` times the largest are dropped, so
    ``lam`` holds only positive entries.

    Raises
    ------
    ValueError
        If `M` is empty or identically zero.
    """
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    if M.size == 0 or not np.any(M):
        raise ValueError("svd of an all-zero matrix")
    Q, s, Uh = np.linalg.svd(M, full_matrices=False)
    r = int(np.count_nonzero(s > RANK_RTOL * s[0]))
    Q, s, U = Q[:, :r], s[:r], Uh[:r].conj().T
    ph = _phase_fix(U)
    return SvdFactors(Q=Q * ph, lam=s**2, U=U * ph)


def herm_eig(A, tol=1e-10):
    """Eigen-decomposition of a Hermitian matrix, eigenvalues nonincreasing.

    Returns
    -------
    V : ndarray
        Unitary matrix of eigenvectors (phase-normalized columns).
    d : ndarray
        Real eigenvalues sorted in nonincreasing order.
    """
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if A.shape[0] != A.shape[1]:
        raise ValueError("herm_eig needs a square matrix")
    scale = max(1.0, float(np.abs(A).max(initial=0.0)))
    if np.abs(A - A.conj().T).max(initial=0.0) > tol * scale:
        raise ValueError("matrix is not Hermitian")
    d, V = np.linalg.eigh(0.5 * (A + A.conj().T))
    d, V = d[::-1], V[:, ::-1]
    return V * _phase_fix(V), d


def null_projector(U_sel, tol=1e-8):
    """Orthogonal projector ``I - U U^H`` onto the complement of span(U_sel)."""
    U = np.asarray(U_sel, dtype=complex)
    if U.ndim == 1:
        U = U[:, None]
    n, r = U.shape
    if r and np.abs(U.conj().T @ U - np.eye(r)).max() > tol:
        raise ValueError("columns of U_sel are not orthonormal")
    P = np.eye(n, dtype=complex) - U @ U.conj().T
    return 0.5 * (P + P.conj().T)


def inv_sqrt_psd(A, rtol=1e-14):
    """Hermitian inverse square root ``B`` with ``B A B = I``.

    Raises
    ------
    ValueError
        If `A` is singular or indefinite (smallest eigenvalue not above
        ``rtol`` times the largest).
    """
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    d, V = np.linalg.eigh(0.5 * (A + A.conj().T))
    if d[0] <= rtol * max(abs(d[-1]), np.finfo(float).tiny):
        raise ValueError("inv_sqrt_psd needs a positive definite matrix")
    B = (V / np.sqrt(d)) @ V.conj().T
    return 0.5 * (B + B.conj().T)
