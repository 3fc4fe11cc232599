"""Row-sampling spectral approximation and leverage-score estimation.

``B ≈_eps A`` below means ``(1-eps) A^T A <= B^T B <= (1+eps) A^T A``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, ShapeError
from .linalg import PINV_RTOL, psd_pinv
from .oracle import CostKind, CostLedger, HalvingChain, RowOracle, as_oracle, modeled_quantum_cost
from .rng import as_generator, as_seed, child_seed, substream

C_CONST = 8.0
JL_BETA = 12.0
KERNEL_TOL = 1e-8


def log_factor(d):
    # ln(d) vanishes at d = 1; clamp so p_i stays positive
    return max(math.log(d), 1.0)


def sample_threshold(d, eps, c_const=C_CONST):
    """Row count below which sampling cannot help: every p_i would be 1."""
    return math.ceil(c_const * d * log_factor(d) / eps**2)


def _check_eps(eps):
    if not (eps > 0 and eps <= 1):
        raise DomainError(f"eps must lie in (0, 1], got {eps}")


# --------------------------------------------------------------------------
# sketches


@dataclass
class SpectralSketch:
    rows: np.ndarray
    source_indices: np.ndarray
    scales: np.ndarray
    epsilon: float

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float)
        self.source_indices = np.asarray(self.source_indices, dtype=np.int64)
        self.scales = np.asarray(self.scales, dtype=float)
        if self.rows.ndim != 2 or len(self.source_indices) != len(self.rows) or len(self.scales) != len(self.rows):
            raise ShapeError("sketch rows, indices and scales disagree in length")

    @property
    def m(self):
        return self.rows.shape[0]

    def gram(self):
        return self.rows.T @ self.rows

    def verify_against(self, A, atol=0.0):
        """True when each stored row is ``scale * A[source]``."""
        A = np.asarray(A, dtype=float)
        ref = A[self.source_indices] * self.scales[:, None]
        return bool(np.allclose(self.rows, ref, rtol=1e-12, atol=atol))

    def to_json(self):
        return {
            "source_indices": self.source_indices.tolist(),
            "scales": self.scales.tolist(),
            "epsilon": float(self.epsilon),
        }

    @classmethod
    def from_json(cls, obj, A):
        idx = np.asarray(obj["source_indices"], dtype=np.int64)
        sc = np.asarray(obj["scales"], dtype=float)
        A = np.asarray(A, dtype=float)
        return cls(A[idx] * sc[:, None], idx, sc, float(obj["epsilon"]))


def _subsample_block(rows, idx, w, eps, c_const, rng):
    """Keep ``rows[j]`` with probability ``p_j``, rescaled by ``1/sqrt(p_j)``."""
    w = np.asarray(w, dtype=float)
    if np.any(np.isnan(w)) or np.any(w < 0):
        raise DomainError("weights must be nonnegative and not NaN")
    with np.errstate(invalid="ignore", over="ignore"):
        p = np.minimum(1.0, c_const * w * log_factor(rows.shape[1]) / eps**2)
    p[np.isinf(w)] = 1.0
    u = rng.random(len(p))
    keep = u < p
    pk = p[keep]
    scales = 1.0 / np.sqrt(pk)
    return rows[keep] * scales[:, None], np.asarray(idx)[keep], scales


def weighted_subsample(A, w, eps, c_const=C_CONST, rng=0, ledger=None, label="weighted_subsample"):
    """Sample ``B <-(w, eps) A``: row ``i`` kept independently with
    ``p_i = min(1, c w_i log(d)/eps^2)`` and scaled by ``1/sqrt(p_i)``.

    Only the kept rows are read from the oracle.
    """
    _check_eps(eps)
    orc = as_oracle(A, ledger, label)
    w = np.asarray(w, dtype=float)
    if w.shape != (orc.n,):
        raise ShapeError("w must have length n")
    if np.any(np.isnan(w)) or np.any(w < 0):
        raise DomainError("weights must be nonnegative and not NaN")
    gen = as_generator(rng)
    with np.errstate(invalid="ignore", over="ignore"):
        p = np.minimum(1.0, c_const * w * log_factor(orc.d) / eps**2)
    p[np.isinf(w)] = 1.0
    keep = np.flatnonzero(gen.random(orc.n) < p)
    scales = 1.0 / np.sqrt(p[keep])
    rows = orc.rows(keep) * scales[:, None] if keep.size else np.zeros((0, orc.d))
    return SpectralSketch(rows, keep, scales, eps)


# --------------------------------------------------------------------------
# leverage scores


def leverage_scores_exact(A) -> np.ndarray:
    """``sigma_i = a_i^T (A^T A)^+ a_i`` via a thin SVD."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return np.zeros(A.shape[0])
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    tol = s.max(initial=0.0) * max(A.shape) * np.finfo(float).eps
    U = U[:, s > tol]
    return np.einsum("ij,ij->i", U, U)


@dataclass
class LeverageEstimator:
    """Answers generalized leverage-score queries against a fixed ``B``.

    Direct mode keeps ``(B^T B)^+`` and the kernel projector; JL mode keeps
    the compressed ``C = Pi B (B^T B)^+`` and ``C' = Pi' (I - G G^+)``.
    """

    mode: str
    d: int
    pinv_gram: Optional[np.ndarray] = None
    kernel_proj: Optional[np.ndarray] = None
    C: Optional[np.ndarray] = None
    C_prime: Optional[np.ndarray] = None
    kernel_tolerance: float = KERNEL_TOL
    epsilon: float = 0.0
    k: int = 0

    def query(self, rows) -> np.ndarray:
        """Scores for a block of rows (each row length ``d``); ``inf`` when a
        row is not orthogonal to ``ker B``."""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.shape[1] != self.d:
            raise ShapeError(f"rows must have {self.d} columns")
        norms = np.linalg.norm(rows, axis=1)
        if self.mode == "direct":
            resid = np.linalg.norm(rows @ self.kernel_proj, axis=1)
            val = np.einsum("ij,jk,ik->i", rows, self.pinv_gram, rows)
            val = np.maximum(val, 0.0)
        else:
            resid = np.linalg.norm(rows @ self.C_prime.T, axis=1)
            val = np.sum((rows @ self.C.T) ** 2, axis=1)
        out = np.where(resid <= self.kernel_tolerance * norms, val, np.inf)
        return out


def direct_build(B) -> LeverageEstimator:
    B = np.asarray(B, dtype=float)
    G = B.T @ B
    pinv, ker = psd_pinv(G, PINV_RTOL)
    return LeverageEstimator("direct", B.shape[1], pinv_gram=pinv, kernel_proj=ker)


def generalized_leverage_direct(est: LeverageEstimator, a) -> float:
    return float(est.query(np.asarray(a, dtype=float)[None, :])[0])


def jl_dimension(n_hint, eps, beta=JL_BETA):
    return max(1, math.ceil(beta * math.log(max(n_hint, 2)) / eps**2))


def jl_build(B, eps, n_hint, rng=0, beta=JL_BETA) -> LeverageEstimator:
    """Johnson-Lindenstrauss compressed estimator with Rademacher sketches."""
    _check_eps(eps)
    B = np.asarray(B, dtype=float)
    D, d = B.shape
    k = jl_dimension(n_hint, eps, beta)
    gen = as_generator(rng)
    G = B.T @ B
    pinv, ker = psd_pinv(G, PINV_RTOL)
    Pi = (gen.integers(0, 2, size=(k, D)) * 2.0 - 1.0) / math.sqrt(k)
    Pi2 = (gen.integers(0, 2, size=(k, d)) * 2.0 - 1.0) / math.sqrt(k)
    C = Pi @ (B @ pinv)
    Cp = Pi2 @ ker
    return LeverageEstimator("jl", d, C=C, C_prime=Cp, epsilon=eps, k=k)


def jl_query(est: LeverageEstimator, a) -> float:
    return float(est.query(np.asarray(a, dtype=float)[None, :])[0])


def build_estimator(B, mode, eps, n_hint, rng):
    if mode == "direct":
        return direct_build(B)
    if mode == "jl":
        return jl_build(B, eps, n_hint, rng)
    raise DomainError(f"unknown leverage mode {mode!r}")


def default_mode(d):
    return "direct" if d <= 64 else "jl"


# --------------------------------------------------------------------------
# repeated halving


def repeated_halving(A, eps, rng=0, mode=None, ledger=None, label="spectral", c_const=C_CONST) -> SpectralSketch:
    """Spectral approximation ``B ≈_eps A`` with ``O(d log d / eps^2)`` rows.

    A lazy halving chain ``A = A_0 ⊇ A_1 ⊇ ... ⊇ A_L`` is walked bottom-up:
    ``B_L = A_L``, each ``B_l`` is a ``1/2``-sample of ``A_l`` weighted by
    twice the leverage scores of ``A_l`` relative to ``B_{l+1}``, and the last
    step samples all of ``A`` at the target accuracy. Rows of ``A_l`` that
    meet ``ker B_{l+1}`` get infinite weight and are always kept.
    """
    _check_eps(eps)
    orc = as_oracle(A, ledger, label)
    n, d = orc.n, orc.d
    mode = mode or default_mode(d)
    seed = as_seed(rng)
    orc.ledger.add_modeled(orc.label, modeled_quantum_cost(CostKind.SpectralApprox, n, d, eps))

    if n <= sample_threshold(d, eps, c_const):
        rows = orc.all_rows()
        return SpectralSketch(rows, np.arange(n), np.ones(n), eps)

    chain = HalvingChain(child_seed(seed, "chain"), n, d)
    depth = chain.depths()
    half_cap = sample_threshold(d, 0.5, c_const)

    # bottom of the chain is read in full
    idx = np.flatnonzero(depth >= chain.L)
    B = orc.rows(idx) if idx.size else np.zeros((0, d))
    for level in range(chain.L - 1, -1, -1):
        idx = np.flatnonzero(depth >= level)
        target = eps if level == 0 else 0.5
        rows = orc.rows(idx)
        if level > 0 and idx.size <= half_cap:
            # sampling at 1/2 would keep every row anyway
            B = rows
            continue
        gen = substream(seed, "halving", level)
        est = build_estimator(B, mode, 0.5, n, gen)
        w = np.minimum(1.0, 2.0 * est.query(rows))
        B, src, sc = _subsample_block(rows, idx, w, target, c_const, gen)
    return SpectralSketch(B, src, sc, eps)


def approximate_leverage_scores(A, eps, rng=0, mode=None, ledger=None, label="leverage", c_const=C_CONST):
    """``(1 ± eps)`` estimates of all leverage scores of ``A``.

    Builds ``B ≈ A`` by repeated halving and reads every row once more to
    evaluate ``sigma^B_i``. Direct mode sketches at ``eps/2``; JL mode
    sketches and projects at ``eps/3`` each.
    """
    _check_eps(eps)
    orc = as_oracle(A, ledger, label)
    mode = mode or default_mode(orc.d)
    seed = as_seed(rng)
    inner = eps / 2 if mode == "direct" else eps / 3
    sk = repeated_halving(orc.relabel(orc.label + ":sketch"), inner, child_seed(seed, "sketch"), mode, c_const=c_const)
    est = build_estimator(sk.rows, mode, inner, orc.n, substream(seed, "jl"))
    orc.ledger.add_modeled(orc.label, modeled_quantum_cost(CostKind.LeverageScores, orc.n, orc.d, eps))
    return est.query(orc.all_rows())
