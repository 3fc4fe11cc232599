"""Logarithmic, volumetric, hybrid and Lewis-weight barriers for ``{x : Ax > b}``.

Each barrier has the gradient ``-A^T S^{-1} u`` and surrogate Hessian
``A^T S^{-1} diag(u) S^{-1} A`` for a weight vector ``u``:

==========  ======================================
log         ``u = 1``
volumetric  ``u = sigma(S^{-1} A)``
hybrid      ``u = sigma(S^{-1} A) + rho``, ``rho = (d-1)/(n-1)``
lewis       ``u = w^{(p)}(S^{-1} A)``
==========  ======================================

The Lewis barrier is ``½ ln det(A^T S^{-1} W^{1-2/p} S^{-1} A)`` so that the
gradient above is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, InfeasibleInterior, RankDeficientError
from .lewis import multiplicative_lewis_weights, reference_lewis_weights, weighted_leverage
from .matvec import MatVecRequest, estimate_matvec
from .oracle import CostKind, CostLedger, LpInstance, RowOracle, modeled_quantum_cost
from .rng import child_seed
from .sketch import approximate_leverage_scores, repeated_halving

KINDS = ("log", "volumetric", "hybrid", "lewis")
KAPPA_G = 2.0
# surrogate-to-true Hessian sandwich factors
SANDWICH = {"log": 1.0, "volumetric": 5.0, "hybrid": 5.0}


def default_p(n):
    return max(4, math.ceil(math.log(n)))


@dataclass(frozen=True)
class BarrierKind:
    tag: str
    p: Optional[float] = None
    kappa_h: float = 1.0

    def __post_init__(self):
        if self.tag not in KINDS:
            raise DomainError(f"unknown barrier {self.tag!r}")
        if self.tag == "lewis" and self.p is not None and self.p < 4:
            raise DomainError("the Lewis barrier needs p >= 4")

    def lewis_p(self, n):
        return self.p if self.p is not None else default_p(n)

    def rho(self, n, d):
        if self.tag != "hybrid":
            return 0.0
        if n <= 1:
            raise DomainError("hybrid barrier needs n > 1")
        return (d - 1) / (n - 1)

    def sandwich(self, n):
        if self.tag == "lewis":
            return 1.0 + self.lewis_p(n)
        return SANDWICH[self.tag]

    def cost_kinds(self):
        if self.tag == "log":
            return CostKind.HessianLog, CostKind.GradLog
        if self.tag == "lewis":
            return CostKind.HessianLewis, CostKind.GradLewis
        return CostKind.HessianVol, CostKind.GradVol


def as_kind(kind, p=None) -> BarrierKind:
    if isinstance(kind, BarrierKind):
        return kind
    return BarrierKind(str(kind).lower(), p)


def _unpack(inst):
    return inst.A, inst.b


def slacks(inst: LpInstance, x) -> np.ndarray:
    """``s = A x - b``; raises :class:`InfeasibleInterior` at the first ``s_i <= 0``."""
    A, b = _unpack(inst)
    s = A @ np.asarray(x, dtype=float) - b
    bad = np.flatnonzero(~(s > 0))
    if bad.size:
        raise InfeasibleInterior(bad[0], s[bad[0]])
    return s


def complexity(kind, n, d) -> float:
    """Self-concordance parameter ``θ`` of the barrier."""
    kind = as_kind(kind)
    if kind.tag == "log":
        return float(n)
    if kind.tag == "volumetric":
        return math.sqrt(n) * d
    if kind.tag == "hybrid":
        return kind.kappa_h * math.sqrt(n * d)
    p = kind.lewis_p(n)
    vp = (p + 2) ** 1.5 * n ** (1.0 / (p + 2)) + 4 * max(p, 2) ** 2.5
    return d * vp**2


# --------------------------------------------------------------------------
# exact quantities


def exact_weights(kind, A, s, init=None) -> np.ndarray:
    kind = as_kind(kind)
    n, d = A.shape
    if kind.tag == "log":
        return np.ones(n)
    if kind.tag == "lewis":
        return reference_lewis_weights(A / s[:, None], kind.lewis_p(n), init=init).weights
    sig = weighted_leverage(A, 1.0 / s)
    return sig + kind.rho(n, d)


def barrier_value(kind, inst: LpInstance, x, weights=None) -> float:
    kind = as_kind(kind)
    A = inst.A
    s = slacks(inst, x)
    n, d = A.shape
    if kind.tag == "log":
        return float(-np.sum(np.log(s)))
    if kind.tag in ("volumetric", "hybrid"):
        M = A.T @ (A / s[:, None] ** 2)
        sign, logdet = np.linalg.slogdet(M)
        if sign <= 0:
            raise RankDeficientError("A^T S^-2 A is singular")
        val = 0.5 * logdet
        if kind.tag == "hybrid":
            val -= kind.rho(n, d) * float(np.sum(np.log(s)))
        return float(val)
    p = kind.lewis_p(n)
    w = exact_weights(kind, A, s) if weights is None else np.asarray(weights, dtype=float)
    g = 1.0 - 2.0 / p
    M = A.T @ (A * (w**g / s**2)[:, None])
    sign, logdet = np.linalg.slogdet(M)
    if sign <= 0:
        raise RankDeficientError("Lewis Gram matrix is singular")
    # stationary in w: first-order insensitive to errors in the weights
    return float(0.5 * (logdet - g * (np.sum(w) - d)))


def gradient_from_weights(A, s, u) -> np.ndarray:
    return -(A.T @ (u / s))


def hessian_from_weights(A, s, u) -> np.ndarray:
    B = A / s[:, None]
    return B.T @ (B * u[:, None])


def gradient_exact(kind, inst, x) -> np.ndarray:
    s = slacks(inst, x)
    return gradient_from_weights(inst.A, s, exact_weights(kind, inst.A, s))


def hessian_surrogate_exact(kind, inst, x) -> np.ndarray:
    s = slacks(inst, x)
    return hessian_from_weights(inst.A, s, exact_weights(kind, inst.A, s))


def hessian_fd(kind, inst, x, h=None) -> np.ndarray:
    """Central differences of the exact gradient."""
    x = np.asarray(x, dtype=float)
    h = h if h is not None else 1e-5 * (1 + np.linalg.norm(x))
    d = x.size
    H = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        H[:, j] = (gradient_exact(kind, inst, x + e) - gradient_exact(kind, inst, x - e)) / (2 * h)
    return 0.5 * (H + H.T)


def gradient_fd(kind, inst, x, h=None) -> np.ndarray:
    """Central differences of :func:`barrier_value`."""
    x = np.asarray(x, dtype=float)
    h = h if h is not None else 1e-5 * (1 + np.linalg.norm(x))
    g = np.empty(x.size)
    for j in range(x.size):
        e = np.zeros(x.size)
        e[j] = h
        g[j] = (barrier_value(kind, inst, x + e) - barrier_value(kind, inst, x - e)) / (2 * h)
    return g


# --------------------------------------------------------------------------
# sketched oracles


def approx_weights(kind, A, s, eps, rng, ledger, label, init=None):
    """``(1 ± eps)`` estimates of the barrier weights of ``S^{-1} A``."""
    kind = as_kind(kind)
    n, d = A.shape
    if kind.tag == "log":
        return np.ones(n)
    if kind.tag == "lewis":
        res = multiplicative_lewis_weights(A / s[:, None], kind.lewis_p(n), min(eps, 0.5), rng, ledger, label, method="contraction", init=init)
        return res.weights
    orc = RowOracle(A, ledger, label, scale=1.0 / s)
    sig = approximate_leverage_scores(orc, eps, rng, ledger=ledger, label=label)
    return sig + kind.rho(n, d)


def hessian_sketch(kind, inst, x, eps, rng=0, ledger=None, label=None, weights=None) -> np.ndarray:
    """``Q ≈_eps`` surrogate Hessian, from a row sample of ``diag(sqrt(u)) S^{-1} A``.

    Weighted barriers estimate ``u`` to ``eps/3`` and sketch to ``eps/3``,
    since ``(1 - eps/3)^2 >= 1 - eps``. Pass ``weights`` to reuse estimates
    of at least that quality.
    """
    kind = as_kind(kind)
    ledger = ledger if ledger is not None else CostLedger()
    label = label or f"hessian:{kind.tag}"
    A = inst.A
    n, d = A.shape
    s = slacks(inst, x)
    hk, _ = kind.cost_kinds()
    ledger.add_modeled(label, modeled_quantum_cost(hk, n, d, eps))
    if kind.tag == "log":
        sk = repeated_halving(RowOracle(A, ledger, label + ":sketch", scale=1.0 / s), eps, child_seed(rng, "h"))
        return sk.gram()
    if weights is None:
        weights = approx_weights(kind, A, s, eps / 3, child_seed(rng, "w"), ledger, label + ":weights")
    orc = RowOracle(A, ledger, label + ":sketch", scale=np.sqrt(weights) / s)
    return repeated_halving(orc, eps / 3, child_seed(rng, "h")).gram()


def gradient_weight_precision(zeta, d, kappa_g=KAPPA_G):
    return zeta / (kappa_g * math.sqrt(d))


def gradient_estimate(kind, inst, x, zeta, rng=0, ledger=None, label=None, weights=None, failure_prob=0.01) -> np.ndarray:
    """``g~`` with ``||g~ - g||_{H~^{-1}} <= zeta`` w.h.p.

    Log: mat-vec estimate of ``(S^{-1}A)^T 1``. Weighted barriers: estimate of
    ``B~^T v~`` with ``B~ = diag(sqrt(u~)) S^{-1} A`` and ``v~ = sqrt(u~)``,
    where ``u~`` is accurate to ``zeta / (κ_g √d)``. The weight error uses
    part of the budget; the mat-vec gets the rest.
    """
    kind = as_kind(kind)
    ledger = ledger if ledger is not None else CostLedger()
    label = label or f"gradient:{kind.tag}"
    A = inst.A
    n, d = A.shape
    s = slacks(inst, x)
    _, gk = kind.cost_kinds()
    ledger.add_modeled(label, modeled_quantum_cost(gk, n, d, zeta))
    if kind.tag == "log":
        orc = RowOracle(A, ledger, label + ":matvec", scale=1.0 / s)
        y = estimate_matvec(MatVecRequest(orc, np.ones(n), 1.0, zeta, failure_prob), child_seed(rng, "mv"))
        return -y
    dw = gradient_weight_precision(zeta, d)
    if weights is None:
        weights = approx_weights(kind, A, s, dw, child_seed(rng, "w"), ledger, label + ":weights")
    r = np.sqrt(weights)
    # weight error contributes at most dw * ||sqrt(u)||_2 in the local norm
    spent = dw * math.sqrt(float(np.sum(weights)) / (1 - dw))
    delta = max(zeta / 8, (zeta - spent) * math.sqrt(1 - dw))
    alpha_v = math.sqrt((1 + dw) * (1 + kind.rho(n, d))) if kind.tag != "lewis" else math.sqrt(1 + dw)
    alpha_v = max(alpha_v, float(r.max()))
    orc = RowOracle(A, ledger, label + ":matvec", scale=r / s)
    y = estimate_matvec(MatVecRequest(orc, r, alpha_v, delta, failure_prob), child_seed(rng, "mv"))
    return -y
