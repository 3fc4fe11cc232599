"""Short-step path following with approximate Newton steps.

The driver minimises ``f_eta(x) = eta c^T x + f(x)`` for an increasing
sequence ``eta``. At each point it gets a Hessian surrogate ``Q`` and a
gradient estimate ``g~`` and steps ``x <- x + δ d~`` with ``d~ = -Q^{-1} g~``
and ``δ = 1/(4C)`` until ``||d~||_Q < α``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .barrier import (
    approx_weights,
    as_kind,
    barrier_value,
    complexity,
    exact_weights,
    gradient_estimate,
    gradient_from_weights,
    gradient_weight_precision,
    hessian_from_weights,
    hessian_sketch,
    slacks,
)
from .errors import DomainError, NonConvergence
from .oracle import CostLedger, LpInstance
from .rng import child_seed

ALPHA = 1.0 / 32
ZETA = 1.0 / 32
EPS_H = 0.1
# a step may not shrink any slack below this fraction of its old value
GUARD_FRACTION = 0.25
MAX_CENTERING = 20_000


def sketch_factor(eps_h):
    return (1.0 + eps_h) / (1.0 - eps_h)


def path_complexity(kind, n, d):
    """``θ`` used for the η schedule.

    The self-concordance value, except for the Lewis barrier, where
    ``sup ||g||^2_{H^{-1}} <= sum w = d`` bounds the gap directly, so ``d`` is
    used in place of the (much larger) self-concordance bound.
    """
    kind = as_kind(kind)
    if kind.tag == "lewis":
        return float(d)
    return complexity(kind, n, d)


@dataclass
class NewtonParams:
    theta: float
    C: float = 1.0
    alpha: float = ALPHA
    zeta: float = ZETA
    max_inner: Optional[int] = None

    def __post_init__(self):
        if self.C < 1:
            raise DomainError("C must be >= 1")
        if self.theta <= 0:
            raise DomainError("theta must be positive")
        lhs = (self.alpha + self.zeta) * self.beta + (self.beta - 1) * math.sqrt(self.theta)
        if lhs > 0.25 + 1e-15:
            raise DomainError(f"(α+ζ)β + (β-1)√θ = {lhs:.4f} exceeds 1/4")
        if self.max_inner is None:
            self.max_inner = math.ceil(64 * self.C**2)

    @property
    def beta(self):
        return 1.0 + 1.0 / (8.0 * math.sqrt(self.theta))

    @property
    def step_delta(self):
        return 1.0 / (4.0 * self.C)

    @classmethod
    def for_barrier(cls, kind, n, d, mode="sketched", eps_h=EPS_H, alpha=ALPHA, zeta=ZETA):
        kind = as_kind(kind)
        C = kind.sandwich(n)
        if mode == "sketched":
            C *= sketch_factor(eps_h)
        elif mode != "exact":
            raise DomainError(f"unknown mode {mode!r}")
        return cls(path_complexity(kind, n, d), C, alpha, zeta if mode == "sketched" else 0.0)


def predicted_outer(theta, eps, eta0, beta):
    return max(0, math.ceil(math.log(2 * theta / (eps * eta0)) / math.log(beta)))


# --------------------------------------------------------------------------
# oracles


@dataclass
class PointEval:
    x: np.ndarray
    s: np.ndarray
    Q: np.ndarray
    g: np.ndarray
    weights: np.ndarray
    value: float


class Oracles:
    """Hessian surrogates and barrier gradients at a point.

    ``mode="exact"`` returns the surrogate and exact gradient;
    ``mode="sketched"`` returns ``Q ≈_{eps_h}`` the surrogate and a gradient
    within ``zeta`` in the local dual norm, with fresh randomness per call.
    """

    def __init__(self, kind, inst: LpInstance, mode="sketched", eps_h=EPS_H, zeta=ZETA, seed=0, ledger=None, failure_prob=0.01):
        self.kind = as_kind(kind)
        self.inst = inst
        self.mode = mode
        self.eps_h = eps_h
        self.zeta = zeta
        self.seed = int(seed)
        self.ledger = ledger if ledger is not None else CostLedger()
        self.failure_prob = failure_prob
        self.calls = 0
        self._warm = None

    def evaluate(self, x) -> PointEval:
        x = np.asarray(x, dtype=float)
        A = self.inst.A
        n, d = A.shape
        s = slacks(self.inst, x)
        self.ledger.charge("ipm:slacks", n)
        key = child_seed(self.seed, "eval", self.calls)
        self.calls += 1
        if self.mode == "exact":
            u = exact_weights(self.kind, A, s, init=self._warm)
            self.ledger.charge("ipm:exact", n)
            Q = hessian_from_weights(A, s, u)
            g = gradient_from_weights(A, s, u)
        else:
            u = None
            if self.kind.tag != "log":
                eps_w = min(self.eps_h / 3, gradient_weight_precision(self.zeta, d))
                u = approx_weights(self.kind, A, s, eps_w, child_seed(key, "w"), self.ledger, f"weights:{self.kind.tag}", init=self._warm)
            Q = hessian_sketch(self.kind, self.inst, x, self.eps_h, child_seed(key, "h"), self.ledger, weights=u)
            g = gradient_estimate(self.kind, self.inst, x, self.zeta, child_seed(key, "g"), self.ledger, weights=u, failure_prob=self.failure_prob)
            if u is None:
                u = np.ones(n)
        if self.kind.tag == "lewis":
            self._warm = u
        val = barrier_value(self.kind, self.inst, x, weights=u if self.kind.tag == "lewis" else None)
        return PointEval(x, s, Q, g, u, val)

    def exact_value(self, x):
        """Barrier value with reference weights (for instrumentation)."""
        return barrier_value(self.kind, self.inst, x)


def make_oracles(kind, inst, mode="sketched", eps_h=EPS_H, zeta=ZETA, seed=0, ledger=None, failure_prob=0.01):
    return Oracles(kind, inst, mode, eps_h, zeta if mode == "sketched" else 0.0, seed, ledger, failure_prob)


# --------------------------------------------------------------------------
# steps


def approx_newton_step(Q, g):
    """``d = -Q^{-1} g`` and ``||d||_Q``."""
    Q = np.asarray(Q, dtype=float)
    g = np.asarray(g, dtype=float)
    fac = cho_factor(0.5 * (Q + Q.T))
    dvec = -cho_solve(fac, g)
    return dvec, float(math.sqrt(max(-(dvec @ g), 0.0)))


@dataclass
class IpmTrace:
    records: list = field(default_factory=list)
    outer: list = field(default_factory=list)
    theta: float = 0.0
    beta: float = 1.0
    eta0: float = 0.0
    C: float = 1.0
    centering_steps: int = 0
    guard_hits: int = 0
    descent: list = field(default_factory=list)

    @property
    def outer_iterations(self):
        return len(self.outer)

    def max_inner(self):
        return max((o["inner"] for o in self.outer), default=0)


@dataclass
class IpmState:
    x: np.ndarray
    eta: float
    ev: PointEval


class _Runner:
    def __init__(self, inst, kind, params: NewtonParams, oracles: Oracles, ledger, trace: IpmTrace, record=False, instrument=False, on_record: Optional[Callable] = None):
        self.inst = inst
        self.kind = as_kind(kind)
        self.prm = params
        self.orc = oracles
        self.ledger = ledger
        self.trace = trace
        self.record = record
        self.instrument = instrument
        self.on_record = on_record

    def _guarded(self, ev: PointEval, step):
        """Largest ``t in {1, 1/2, ...}`` keeping every slack above a fraction of itself."""
        As = self.inst.A @ step
        t = 1.0
        while np.any(ev.s + t * As < GUARD_FRACTION * ev.s):
            t *= 0.5
            if t < 1e-12:
                raise NonConvergence("step guard collapsed", self.trace)
        if t < 1.0:
            self.trace.guard_hits += 1
        return t

    def _emit(self, outer, inner, eta, norm_q, ev):
        rec = {
            "outer": outer,
            "inner": inner,
            "eta": eta,
            "step_norm_Q": norm_q,
            "barrier_value": ev.value,
            "objective": float(self.inst.c @ ev.x),
            "min_slack": float(ev.s.min()),
        }
        if self.record or self.on_record is not None:
            rec["ledger"] = self.ledger.snapshot()
        if self.record:
            self.trace.records.append(rec)
        if self.on_record is not None:
            self.on_record(rec)

    def inner_loop(self, ev: PointEval, eta, outer):
        """Damped steps on ``f_eta`` from ``ev`` until ``||d~||_Q < α``."""
        prm = self.prm
        c = self.inst.c
        inner = 0
        while True:
            dvec, nq = approx_newton_step(ev.Q, eta * c + ev.g)
            if nq < prm.alpha:
                return ev, inner, nq
            if inner >= prm.max_inner:
                raise NonConvergence(f"inner loop exceeded {prm.max_inner} steps at eta={eta:.3e}", self.trace)
            step = prm.step_delta * dvec
            t = self._guarded(ev, step)
            x_new = ev.x + t * step
            if self.instrument:
                f0 = eta * (c @ ev.x) + self.orc.exact_value(ev.x)
                f1 = eta * (c @ x_new) + self.orc.exact_value(x_new)
                self.trace.descent.append({"outer": outer, "inner": inner, "norm_Q": nq, "decrease": f0 - f1, "guard": t})
            inner += 1
            ev = self.orc.evaluate(x_new)
            self._emit(outer, inner, eta, nq, ev)


def initial_centering(inst: LpInstance, kind, params: NewtonParams, oracles: Oracles, x0=None, trace=None, max_steps=None):
    """Damped Newton on the barrier alone, then the starting ``η₀``.

    Returns ``(state, trace)`` with ``η₀ = α / (2 ||c||_{Q^{-1}} (1+ζ))``.
    """
    x = np.asarray(inst.x0 if x0 is None else x0, dtype=float)
    if x is None or x.ndim == 0:
        raise DomainError("no starting point")
    trace = trace if trace is not None else IpmTrace()
    max_steps = MAX_CENTERING if max_steps is None else max_steps
    prm = params
    ev = oracles.evaluate(x)
    steps = 0
    probe = _Runner(inst, kind, prm, oracles, oracles.ledger, trace)
    while True:
        dvec, nq = approx_newton_step(ev.Q, ev.g)
        if nq <= prm.alpha / 2:
            break
        if steps >= max_steps:
            raise NonConvergence(f"centering did not reach ||d||_Q <= α/2 in {max_steps} steps", trace)
        step = dvec / (prm.C * (1.0 + nq))
        t = probe._guarded(ev, step)
        ev = oracles.evaluate(ev.x + t * step)
        steps += 1
    trace.centering_steps = steps
    cq = math.sqrt(float(inst.c @ cho_solve(cho_factor(ev.Q), inst.c)))
    eta0 = prm.alpha / (2.0 * cq * (1.0 + prm.zeta))
    trace.eta0 = eta0
    return IpmState(ev.x, eta0, ev), trace


def short_step_iteration(state: IpmState, params: NewtonParams, runner: _Runner, outer: int) -> IpmState:
    eta = params.beta * state.eta
    ev, inner, nq = runner.inner_loop(state.ev, eta, outer)
    runner.trace.outer.append(
        {
            "eta": eta,
            "inner": inner,
            "step_norm_Q": nq,
            "barrier_value": ev.value,
            "objective": float(runner.inst.c @ ev.x),
            "min_slack": float(ev.s.min()),
        }
    )
    return IpmState(ev.x, eta, ev)


@dataclass
class SolveResult:
    x: np.ndarray
    objective: float
    min_slack: float
    eta: float
    trace: IpmTrace
    ledger: CostLedger


def path_follow(
    inst: LpInstance,
    kind,
    eps,
    mode="sketched",
    seed=0,
    params: Optional[NewtonParams] = None,
    oracles: Optional[Oracles] = None,
    ledger: Optional[CostLedger] = None,
    eps_h=EPS_H,
    record=False,
    instrument=False,
    on_record=None,
) -> SolveResult:
    """Follow the central path until ``η >= 2θ/ε``; returns the last iterate."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    kind = as_kind(kind)
    n, d = inst.n, inst.d
    ledger = ledger if ledger is not None else CostLedger()
    params = params or NewtonParams.for_barrier(kind, n, d, mode, eps_h)
    if oracles is None:
        # union bound over the expected number of oracle calls
        est_outer = 8 * math.sqrt(params.theta) * math.log(2 * params.theta * n / eps + math.e)
        est_calls = est_outer * (1 + math.ceil(4 * params.C * math.log(5)))
        fp = min(0.01, 1.0 / (100.0 * est_calls))
        oracles = make_oracles(kind, inst, mode, eps_h, params.zeta or ZETA, seed, ledger, fp)
    trace = IpmTrace(theta=params.theta, beta=params.beta, C=params.C)
    state, trace = initial_centering(inst, kind, params, oracles, trace=trace)
    runner = _Runner(inst, kind, params, oracles, ledger, trace, record, instrument, on_record)

    # entry invariant at eta0; restore it first if the estimates disagree
    _, nq = approx_newton_step(state.ev.Q, state.eta * inst.c + state.ev.g)
    if nq > params.alpha:
        ev, _, _ = runner.inner_loop(state.ev, state.eta, 0)
        state = IpmState(ev.x, state.eta, ev)

    target = 2.0 * params.theta / eps
    outer = 0
    while state.eta < target:
        outer += 1
        state = short_step_iteration(state, params, runner, outer)
    x = state.x
    return SolveResult(x, float(inst.c @ x), float(slacks(inst, x).min()), state.eta, trace, ledger)
