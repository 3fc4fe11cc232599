"""Small dense helpers for symmetric d x d matrices."""

import numpy as np

from .errors import RankDeficientError

PINV_RTOL = 1e-12


def _eig(M):
    M = 0.5 * (M + M.T)
    return np.linalg.eigh(M)


def psd_pinv(G, rtol=PINV_RTOL):
    """Pseudoinverse of a symmetric PSD matrix via eigendecomposition.

    Eigenvalues below ``rtol * lambda_max`` are treated as zero. Returns the
    pseudoinverse together with the orthogonal projector onto the kernel.
    """
    lam, V = _eig(G)
    top = lam[-1] if lam.size else 0.0
    keep = lam > rtol * top if top > 0 else np.zeros_like(lam, dtype=bool)
    Vk = V[:, keep]
    pinv = (Vk / lam[keep]) @ Vk.T
    V0 = V[:, ~keep]
    ker = V0 @ V0.T
    return pinv, ker


def psd_sqrt_pair(G, rtol=PINV_RTOL):
    """Return ``(G^{1/2}, G^{-1/2})`` for a symmetric positive definite ``G``."""
    lam, V = _eig(G)
    if lam.size == 0 or lam[-1] <= 0 or lam[0] <= rtol * lam[-1]:
        raise RankDeficientError("matrix is not positive definite")
    r = np.sqrt(lam)
    return (V * r) @ V.T, (V / r) @ V.T


def whitened_eigs(Q, H):
    """Eigenvalues of ``Q^{-1/2} H Q^{-1/2}`` (ascending).

    ``Q`` must be positive definite. These are the tightest constants with
    ``lo * Q <= H <= hi * Q``.
    """
    _, Qm = psd_sqrt_pair(Q)
    return np.linalg.eigvalsh(Qm @ H @ Qm)


def spectral_error(Q, H):
    """Smallest eps with ``(1-eps) Q <= H <= (1+eps) Q``."""
    lam = whitened_eigs(Q, H)
    return float(max(1.0 - lam[0], lam[-1] - 1.0))


def quad_norm(v, M):
    """``sqrt(v^T M v)``."""
    v = np.asarray(v, dtype=float)
    return float(np.sqrt(max(v @ M @ v, 0.0)))


def inv_quad_norm(v, M):
    """``sqrt(v^T M^{-1} v)`` for positive definite ``M``."""
    v = np.asarray(v, dtype=float)
    L = np.linalg.cholesky(0.5 * (M + M.T))
    z = np.linalg.solve(L, v)
    return float(np.sqrt(z @ z))
