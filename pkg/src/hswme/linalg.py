"""Small dense kernels used by the reduced solvers.

QR keeps a non-negative R diagonal and replaces numerically dependent
columns by canonical vectors orthogonalised against the accepted ones, so
factorisations of zero or rank-deficient matrices are reproducible.
"""
from __future__ import annotations

import warnings
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import SingularSystemError

# relative threshold below which a QR/SVD direction counts as absent
RANK_TOL = 1e-13


class QrResult(NamedTuple):
    Q: np.ndarray
    R: np.ndarray


class SvdResult(NamedTuple):
    U: np.ndarray
    sigma: np.ndarray
    Vt: np.ndarray


def _complete(basis: np.ndarray) -> np.ndarray:
    """Unit vector orthogonal to the orthonormal columns of ``basis``.

    Starts from the canonical vector e_i with the largest residual after
    projection (first index on ties), which always has norm at least
    sqrt((m - k) / m), and orthogonalises it twice.
    """
    m = basis.shape[0]
    resid = 1.0 - np.sum(basis**2, axis=1)
    i = int(np.argmax(resid))
    v = np.zeros(m)
    v[i] = 1.0
    for _ in range(2):
        v -= basis @ (basis.T @ v)
    return v / np.linalg.norm(v)


def qr(A) -> QrResult:
    """Thin QR of an m x k matrix (m >= k)."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("qr expects a 2-d array")
    m, k = A.shape
    if m < k:
        raise ValueError(f"qr needs m >= k, got {A.shape}")
    scale = np.linalg.norm(A)
    if k == 0:
        return QrResult(np.zeros((m, 0)), np.zeros((0, 0)))

    if scale > 0:
        Q, R = np.linalg.qr(A)  # Householder (LAPACK geqrf)
        d = np.diag(R)
        if np.all(np.abs(d) > RANK_TOL * scale):
            s = np.where(d < 0, -1.0, 1.0)
            return QrResult(Q * s, s[:, None] * R)

    # rank-deficient path: Gram-Schmidt with reorthogonalisation and completion
    Q = np.zeros((m, k))
    for j in range(k):
        v = A[:, j].copy()
        basis = Q[:, :j]
        for _ in range(2):
            v -= basis @ (basis.T @ v)
        nrm = np.linalg.norm(v)
        if scale > 0 and nrm > RANK_TOL * scale:
            Q[:, j] = v / nrm
        else:
            Q[:, j] = _complete(basis)
    R = np.triu(Q.T @ A)
    neg = np.diag(R) < 0
    R[neg, :] *= -1.0
    Q[:, neg] *= -1.0
    return QrResult(Q, R)


def orthonormal_completion(Q: np.ndarray, k: int) -> np.ndarray:
    """Extend the orthonormal columns of Q by canonical vectors up to k columns."""
    m = Q.shape[0]
    out = np.zeros((m, k))
    out[:, : Q.shape[1]] = Q
    for j in range(Q.shape[1], k):
        out[:, j] = _complete(out[:, :j])
    return out


def truncated_svd(A, r: int) -> SvdResult:
    """Leading r singular triplets from the eigendecomposition of A^T A.

    The Gram route keeps the memory footprint at n x n, which is what makes
    it usable for tall snapshot matrices; the left vectors are recovered from
    A V and re-orthonormalised.
    """
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    if not 1 <= r <= min(m, n):
        raise ValueError(f"rank {r} outside [1, {min(m, n)}]")
    return svd_from_gram(A.T @ A, r, A)


def svd_from_gram(G: np.ndarray, r: int, A: np.ndarray | None = None) -> SvdResult:
    """Right singular vectors / values from a Gram matrix G = A^T A.

    Without ``A`` only ``sigma`` and ``Vt`` are meaningful (``U`` is empty).
    """
    n = G.shape[0]
    lam, vecs = np.linalg.eigh(0.5 * (G + G.T))
    order = np.argsort(lam)[::-1]
    lam, vecs = lam[order], vecs[:, order]
    # fix eigenvector signs: largest-magnitude entry positive
    idx = np.argmax(np.abs(vecs), axis=0)
    vecs = vecs * np.where(vecs[idx, np.arange(n)] < 0, -1.0, 1.0)
    sigma = np.sqrt(np.clip(lam[:r], 0.0, None))
    top = sigma[0] if r > 0 else 0.0
    keep = sigma > RANK_TOL * top if top > 0 else np.zeros(r, bool)
    V = vecs[:, :r]
    if not np.all(keep):
        V = orthonormal_completion(vecs[:, : int(keep.sum())], r)
        sigma = np.where(keep, sigma, 0.0)
    if A is None:
        return SvdResult(np.zeros((0, r)), sigma, V.T)
    B = A @ V
    Q, R = qr(B)
    sigma = np.where(keep, np.abs(np.diag(R)), 0.0)
    order = np.argsort(-sigma, kind="stable")
    return SvdResult(Q[:, order], sigma[order], V[:, order].T)


def solve_dense(A, B) -> np.ndarray:
    """Solve A X = B by LU with partial pivoting."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got {A.shape}")
    if A.shape[0] == 0:
        return B.copy()
    with warnings.catch_warnings():
        # exact zero pivots are reported below as SingularSystemError
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    if np.min(np.abs(np.diag(lu))) < 1e-14 * np.linalg.norm(A, np.inf):
        raise SingularSystemError("matrix is numerically singular")
    return scipy.linalg.lu_solve((lu, piv), B)


def kron_operator(A1, H1, A2, H2, dt: float) -> np.ndarray:
    """Matrix of L -> L - dt A1 L H1 - dt A2 L H2 acting on vec(L) (column-major)."""
    n, r = A1.shape[0], H1.shape[0]
    return np.eye(n * r) - dt * np.kron(H1.T, A1) - dt * np.kron(H2.T, A2)


def solve_kron(A1, H1, A2, H2, dt: float, rhs) -> np.ndarray:
    """Solve L - dt A1 L H1 - dt A2 L H2 = rhs for L (N x r)."""
    rhs = np.asarray(rhs, dtype=float)
    op = kron_operator(np.asarray(A1), np.asarray(H1), np.asarray(A2), np.asarray(H2), dt)
    x = solve_dense(op, rhs.reshape(-1, order="F"))
    return x.reshape(rhs.shape, order="F")
