"""l_p Lewis weights.

The Lewis weights of ``A`` are the positive vector ``w`` with
``w_i = sigma_i(W^{1/2 - 1/p} A)``. A vector ``v`` is ``eps``-FP-approximate
when ``v_i`` is within ``(1 ± eps)`` of ``sigma_i(V^{1/2 - 1/p} A)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DomainError, NonConvergence, RankDeficientError
from .oracle import CostKind, CostLedger, RowOracle, modeled_quantum_cost
from .rng import as_seed, child_seed
from .sketch import approximate_leverage_scores

KAPPA = 4.0


@dataclass
class LewisParams:
    p: float
    epsilon: float
    n: int
    d: int

    def __post_init__(self):
        if self.p < 2:
            raise DomainError(f"p must be >= 2, got {self.p}")
        if not 0 < self.epsilon < 1:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon}")

    @property
    def T(self) -> int:
        return max(1, math.ceil(2 * math.log(self.n / self.d) / self.epsilon))

    @property
    def alpha(self) -> float:
        return 2.0 / (self.p - 2.0) if self.p > 2 else math.inf


@dataclass
class LewisResult:
    weights: np.ndarray
    fp_residual: float
    p: float
    epsilon: float
    iterations: int = 0
    method: str = "fixed_point"

    def to_json(self):
        return {
            "p": float(self.p),
            "epsilon": float(self.epsilon),
            "weights": [float(x) for x in self.weights],
            "fp_residual": float(self.fp_residual),
        }


def weighted_leverage(A, scale) -> np.ndarray:
    """Leverage scores of ``diag(scale) @ A`` for full-column-rank ``A``."""
    scale = np.asarray(scale, dtype=float)
    R = np.linalg.qr(A * scale[:, None], mode="r")
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag.min() <= 1e-13 * max(diag.max(), 1e-300):
        raise RankDeficientError("matrix does not have full column rank")
    # s_i^2 |R^{-T} a_i|^2 keeps relative accuracy on rows with tiny scores,
    # unlike reading row norms off Q
    Z = solve_triangular(R, A.T, trans="T", lower=False)
    return scale**2 * np.einsum("ji,ji->i", Z, Z)


def _fp_scores(A, v, p):
    return weighted_leverage(A, v ** (0.5 - 1.0 / p))


def fp_residual(A, v, p) -> float:
    """``max_i |v_i / sigma_i(V^{1/2-1/p} A) - 1|``."""
    A = np.asarray(A, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0):
        raise DomainError("weights must be positive")
    return float(np.max(np.abs(v / _fp_scores(A, v, p) - 1.0)))


def rho(A, p, v) -> np.ndarray:
    """``rho_i(v) = a_i^T (A^T V A)^+ a_i / v_i^alpha`` with ``alpha = 2/(p-2)``."""
    if p <= 2:
        raise DomainError("rho needs p > 2")
    v = np.asarray(v, dtype=float)
    if np.any(~(v > 0)):
        raise DomainError("v must be entrywise positive")
    a = 2.0 / (p - 2.0)
    sig = weighted_leverage(np.asarray(A, dtype=float), np.sqrt(v))
    return sig / v ** (1.0 + a)


def stability_exponent(p, d, mu) -> float:
    """Bound on ``|ln(v_hat/w_hat)|`` given ``|ln rho(v_hat)| <= mu``."""
    a = 2.0 / (p - 2.0)
    return (1.0 / a) * (1.0 + math.sqrt(d) / a) * mu


def _check_full_rank(A):
    if np.linalg.matrix_rank(A) < A.shape[1]:
        raise RankDeficientError("Lewis weights need full column rank")


def fp_lewis_weights(A, p, eps, score_mode="exact", rng=0, ledger=None, label="lewis", output="last") -> LewisResult:
    """``T`` fixed-point rounds from the uniform start ``d/n``.

    Each round sets ``v^{k+1}`` to (estimates of) the leverage scores of
    ``(V^k)^{1/2-1/p} A``. ``output="last"`` returns the final round;
    ``output="mean"`` returns the average of the ``T`` computed rounds, which
    is far from a fixed point on rows with tiny weights. ``score_mode="sketch"``
    swaps the exact scores for ``(1 ± eps/4)`` estimates from repeated halving.
    """
    A = np.asarray(A, dtype=float)
    n, d = A.shape
    prm = LewisParams(p, eps, n, d)
    _check_full_rank(A)
    ledger = ledger if ledger is not None else CostLedger()
    seed = as_seed(rng)
    ledger.add_modeled(label, modeled_quantum_cost(CostKind.LewisWeights, n, d, eps))
    if score_mode == "exact":
        ledger.charge(label, n)
    elif score_mode != "sketch":
        raise DomainError(f"unknown score mode {score_mode!r}")
    if output not in ("last", "mean"):
        raise DomainError(f"unknown output {output!r}")

    v = np.full(n, d / n)
    acc = np.zeros(n)
    expo = 0.5 - 1.0 / p
    for k in range(prm.T):
        if score_mode == "exact":
            v = weighted_leverage(A, v**expo)
        else:
            orc = RowOracle(A, ledger, label + ":scores", scale=v**expo)
            v = approximate_leverage_scores(orc, eps / 4, child_seed(seed, "round", k), ledger=ledger, label=orc.label)
            if np.any(~np.isfinite(v)) or np.any(v <= 0):
                raise RankDeficientError("score estimate degenerated")
        acc += v
    vbar = v if output == "last" else acc / prm.T
    return LewisResult(vbar, fp_residual(A, vbar, p), p, eps, prm.T, "fixed_point")


def contraction_lewis_weights(A, p, tol=1e-12, max_iter=10_000, ledger=None, label="lewis", init=None):
    """Damped fixed-point iteration in log space, run until the FP residual
    drops to ``tol``.

    ``u <- (1-θ) u + θ (p/2) ln tau(u)`` with ``tau_i = a_i^T (A^T W^{1-2/p} A)^{-1} a_i``
    and ``θ = 4/(p+2)``; near the fixed point this contracts by ``(p-2)/(p+2)``
    per step. ``init`` warm-starts from a previous weight vector; the stopping
    rule is the same certificate either way.
    """
    A = np.asarray(A, dtype=float)
    n, d = A.shape
    if p < 2:
        raise DomainError("p must be >= 2")
    if ledger is not None:
        ledger.charge(label, n)
    theta = 4.0 / (p + 2.0)
    g = 1.0 - 2.0 / p
    if init is None:
        u = np.full(n, math.log(d / n))
    else:
        u = np.log(np.maximum(np.asarray(init, dtype=float), 1e-300))
    res = math.inf
    for it in range(1, max_iter + 1):
        w = np.exp(u)
        sig = weighted_leverage(A, np.exp(0.5 * g * u))
        res = float(np.max(np.abs(w / sig - 1.0)))
        if res <= tol:
            return LewisResult(w, res, p, tol, it, "contraction")
        # sigma_i = w_i^g tau_i
        ln_tau = np.log(sig) - g * u
        u = (1.0 - theta) * u + theta * 0.5 * p * ln_tau
    raise NonConvergence(f"Lewis contraction stalled at residual {res:.3e}")


def reference_lewis_weights(A, p, tol=1e-12, init=None) -> LewisResult:
    """High-precision weights, certified by their own FP residual."""
    return contraction_lewis_weights(A, p, tol=tol, init=init)


def multiplicative_lewis_weights(A, p, eps, rng=0, ledger=None, label="lewis", kappa=KAPPA, method="fixed_point", score_mode="exact", init=None) -> LewisResult:
    """Weights within ``exp(±eps)``-ish of the true Lewis weights.

    Runs the FP stage at precision ``mu = eps α² / (κ √d)`` (``α = 2/(p-2)``);
    the stability bound then turns the FP certificate into a multiplicative
    one. ``method="contraction"`` reaches the same certificate with far fewer
    leverage computations.
    """
    if p < 4:
        raise DomainError("multiplicative Lewis weights need p >= 4")
    if not 0 < eps < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {eps}")
    A = np.asarray(A, dtype=float)
    n, d = A.shape
    a = 2.0 / (p - 2.0)
    mu = eps * a * a / (kappa * math.sqrt(d))
    # residual r gives |ln rho| <= -ln(1-r); pick r so that this is mu
    r = -math.expm1(-mu)
    ledger = ledger if ledger is not None else CostLedger()
    if method == "fixed_point":
        res = fp_lewis_weights(A, p, r, score_mode, rng, ledger, label)
        if res.fp_residual > r:
            raise NonConvergence(f"FP stage reached residual {res.fp_residual:.3e} > {r:.3e}")
    elif method == "contraction":
        _check_full_rank(A)
        ledger.add_modeled(label, modeled_quantum_cost(CostKind.LewisWeights, n, d, r))
        res = contraction_lewis_weights(A, p, tol=r, ledger=ledger, label=label, init=init)
    else:
        raise DomainError(f"unknown method {method!r}")
    return LewisResult(res.weights, res.fp_residual, p, eps, res.iterations, method)
