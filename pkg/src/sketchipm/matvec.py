"""Approximate ``B^T v`` in the ``(B^T B)^{-1}`` norm by preconditioned row sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundViolation, DomainError, ShapeError
from .linalg import inv_quad_norm, psd_sqrt_pair
from .oracle import CostLedger, as_oracle
from .rng import as_seed, child_seed, substream
from .sketch import repeated_halving

GAMMA = 0.5
FAILURE_PROB = 0.01


@dataclass
class MatVecRequest:
    B: object
    v: np.ndarray
    alpha_v: float
    delta: float
    failure_prob: float = FAILURE_PROB

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float)
        if not self.delta > 0:
            raise DomainError("delta must be positive")
        if not 0 < self.failure_prob < 1:
            raise DomainError("failure_prob must lie in (0, 1)")
        if self.alpha_v < 0:
            raise DomainError("alpha_v must be nonnegative")


def mom_schedule(n, d, alpha_v, delta, failure_prob):
    """``(groups, group_size)`` for the median-of-means estimate."""
    G = max(1, math.ceil(8 * math.log(1 / failure_prob)))
    tr = (1 + GAMMA) * n * d * alpha_v**2
    m = max(1, math.ceil(16 * tr / delta**2 / G))
    return G, m


def preconditioner(B, rng, ledger=None, label="matvec"):
    """``(W^{1/2}, W^{-1/2})`` for a ``1/2``-spectral approximation ``W`` of ``B^T B``."""
    orc = as_oracle(B, ledger, label)
    sk = repeated_halving(orc.relabel(orc.label + ":precond"), 0.5, rng)
    return psd_sqrt_pair(sk.gram())


def _check_bound(v, idx, alpha_v):
    vals = np.abs(v[idx])
    bad = np.flatnonzero(vals > alpha_v * (1 + 1e-12))
    if bad.size:
        i = int(idx[bad[0]])
        raise BoundViolation(i, v[i], alpha_v)


def estimate_matvec(req: MatVecRequest, rng=0, ledger=None, label="matvec", return_info=False):
    """Estimate ``y = B^T v`` with ``||y~ - y||_{(B^T B)^{-1}} <= delta`` w.p. ``1 - failure_prob``.

    Samples ``X = n v_l W^{-1/2} b_l`` for uniform ``l``; ``E[X] = W^{-1/2} B^T v``.
    The coordinate-wise median of group means is mapped back by ``W^{1/2}``.
    Group draws are realised through multinomial counts, which has the same
    law as drawing each index separately; every draw is billed as one row
    query.
    """
    orc = as_oracle(req.B, ledger, label)
    n, d = orc.n, orc.d
    if req.v.shape != (n,):
        raise ShapeError("v must have length n")
    seed = as_seed(rng)
    Wh, Wmh = preconditioner(orc, child_seed(seed, "precond"), orc.ledger, orc.label)

    G, m = mom_schedule(n, d, req.alpha_v, req.delta, req.failure_prob)
    gen = substream(seed, "samples")
    counts = gen.multinomial(m, np.full(n, 1.0 / n), size=G)
    touched = np.flatnonzero(counts.sum(axis=0))
    _check_bound(req.v, touched, req.alpha_v)
    rows = orc.rows(touched)
    orc.ledger.charge(orc.label, G * m - touched.size)
    orc.ledger.add_modeled(orc.label, math.sqrt(n) * d * req.alpha_v / req.delta)

    # group mean: (n/m) W^{-1/2} sum_l count_l v_l b_l
    coef = counts[:, touched] * req.v[touched]
    means = (n / m) * (coef @ rows) @ Wmh
    mu = np.median(means, axis=0)
    y = Wh @ mu
    if return_info:
        return y, {"groups": G, "group_size": m, "samples": G * m}
    return y


def matvec_samples(B, v, Wmh, size, rng):
    """Draw ``size`` samples of ``X = n v_l W^{-1/2} b_l`` (diagnostics)."""
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    idx = rng.integers(0, n, size=size)
    return n * v[idx, None] * (B[idx] @ Wmh)


def exact_matvec(B, v) -> np.ndarray:
    B = np.asarray(B, dtype=float)
    v = np.asarray(v, dtype=float)
    out = np.zeros(B.shape[1])
    for i in range(B.shape[0]):
        if v[i]:
            out += v[i] * B[i]
    return out


def perturbation_bound_check(B, v, D):
    """Both sides of ``||B^T v - B^T D v||_{(B^T B)^{-1}} <= eps ||v||_2``.

    ``D`` is the diagonal as a vector; ``eps = max |D_i - 1|``.
    """
    B = np.asarray(B, dtype=float)
    v = np.asarray(v, dtype=float)
    D = np.asarray(D, dtype=float)
    eps = float(np.max(np.abs(D - 1.0))) if D.size else 0.0
    diff = B.T @ (v - D * v)
    lhs = inv_quad_norm(diff, B.T @ B) if np.any(diff) else 0.0
    return lhs, eps * float(np.linalg.norm(v))


def local_error(y_est, y, BtB) -> float:
    """``||y_est - y||_{(B^T B)^{-1}}``."""
    return inv_quad_norm(np.asarray(y_est) - np.asarray(y), BtB)
