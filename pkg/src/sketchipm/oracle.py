"""Row-query access to LP data, cost accounting, lazy halving chains and generators.

Rows are indexed from 0. Every read of a constraint row goes through a
:class:`RowOracle` (or :func:`row_query`) so that the :class:`CostLedger`
sees the exact number of rows touched.
"""

from __future__ import annotations

import enum
import json
import math
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import BoundsError, DomainError, InfeasibleInterior, ShapeError
from .rng import substream


# --------------------------------------------------------------------------
# LP instances


@dataclass
class LpInstance:
    """``min c^T x`` subject to ``A x >= b``."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    x0: Optional[np.ndarray] = None

    def __post_init__(self):
        self.A = np.ascontiguousarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.c = np.asarray(self.c, dtype=float).ravel()
        if self.A.ndim != 2:
            raise ShapeError("A must be two-dimensional")
        n, d = self.A.shape
        if d < 1 or n < d:
            raise ShapeError(f"need n >= d >= 1, got n={n}, d={d}")
        if self.b.shape != (n,) or self.c.shape != (d,):
            raise ShapeError("b must have length n and c length d")
        for name, arr in (("A", self.A), ("b", self.b), ("c", self.c)):
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"{name} has non-finite entries")
        if self.x0 is not None:
            self.x0 = np.asarray(self.x0, dtype=float).ravel()
            if self.x0.shape != (d,):
                raise ShapeError("x0 must have length d")
            s = self.A @ self.x0 - self.b
            bad = np.flatnonzero(~(s > 0))
            if bad.size:
                raise InfeasibleInterior(bad[0], s[bad[0]])

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    @property
    def r(self) -> int:
        """Maximum number of nonzeros in a row of ``A``."""
        return int(np.count_nonzero(self.A, axis=1).max())

    def to_json(self) -> dict:
        out = {"n": self.n, "d": self.d, "A": self.A.ravel().tolist(), "b": self.b.tolist(), "c": self.c.tolist()}
        if self.x0 is not None:
            out["x0"] = self.x0.tolist()
        return out

    @classmethod
    def from_json(cls, obj) -> "LpInstance":
        n, d = int(obj["n"]), int(obj["d"])
        A = np.asarray(obj["A"], dtype=float)
        if A.size != n * d:
            raise ShapeError(f"A has {A.size} entries, expected {n * d}")
        return cls(A.reshape(n, d), obj["b"], obj["c"], obj.get("x0"))


def load_lp(path) -> LpInstance:
    """Read an LP from JSON or the plain-text row format.

    The text format is ``n d`` on the first line, ``n`` lines holding a row of
    ``A`` followed by ``b_i``, and a final line holding ``c``.
    """
    with open(path) as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return LpInstance.from_json(json.loads(stripped))
    return parse_lp_text(text)


def parse_lp_text(text: str) -> LpInstance:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ShapeError("empty LP file")
    head = lines[0].split()
    if len(head) != 2:
        raise ShapeError("first line must be 'n d'")
    n, d = int(head[0]), int(head[1])
    if len(lines) != n + 2:
        raise ShapeError(f"expected {n + 2} non-empty lines, found {len(lines)}")
    rows = np.array([[float(t) for t in ln.split()] for ln in lines[1 : n + 1]])
    if rows.shape != (n, d + 1):
        raise ShapeError("each constraint line needs d+1 numbers")
    c = np.array([float(t) for t in lines[n + 1].split()])
    return LpInstance(rows[:, :d], rows[:, d], c)


def format_lp_text(inst: LpInstance) -> str:
    out = [f"{inst.n} {inst.d}"]
    for a, bi in zip(inst.A, inst.b):
        out.append(" ".join(repr(float(v)) for v in (*a, bi)))
    out.append(" ".join(repr(float(v)) for v in inst.c))
    return "\n".join(out) + "\n"


def save_lp(inst: LpInstance, path, fmt="json"):
    with open(path, "w") as fh:
        if fmt == "json":
            json.dump(inst.to_json(), fh)
        else:
            fh.write(format_lp_text(inst))


# --------------------------------------------------------------------------
# cost accounting


@dataclass
class LedgerEntry:
    classical_row_queries: int = 0
    modeled_quantum_row_queries: float = 0.0
    wall_time: float = 0.0


class CostLedger:
    """Per-label counters of classical row reads and modeled quantum queries.

    Counters only go up. Updates take a lock so concurrent readers of one
    oracle can share a ledger.
    """

    def __init__(self):
        self._entries: dict[str, LedgerEntry] = {}
        self._lock = threading.Lock()

    def _entry(self, label):
        e = self._entries.get(label)
        if e is None:
            e = self._entries[label] = LedgerEntry()
        return e

    def charge(self, label: str, rows: int = 1):
        if rows < 0:
            raise DomainError("row count must be nonnegative")
        with self._lock:
            self._entry(label).classical_row_queries += int(rows)

    def add_modeled(self, label: str, amount: float):
        if amount < 0:
            raise DomainError("modeled cost must be nonnegative")
        with self._lock:
            self._entry(label).modeled_quantum_row_queries += float(amount)

    @contextmanager
    def timed(self, label: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            dt = time.perf_counter() - t0
            with self._lock:
                self._entry(label).wall_time += dt

    def classical(self, label: str) -> int:
        e = self._entries.get(label)
        return e.classical_row_queries if e else 0

    def modeled(self, label: str) -> float:
        e = self._entries.get(label)
        return e.modeled_quantum_row_queries if e else 0.0

    def labels(self):
        return sorted(self._entries)

    def total_classical(self) -> int:
        return sum(e.classical_row_queries for e in self._entries.values())

    def snapshot(self, with_time=False) -> dict:
        """Plain dict keyed by label; wall time is left out unless asked for,
        so that reports stay reproducible."""
        with self._lock:
            out = {}
            for k in sorted(self._entries):
                e = self._entries[k]
                rec = {
                    "classical_row_queries": e.classical_row_queries,
                    "modeled_quantum_row_queries": e.modeled_quantum_row_queries,
                }
                if with_time:
                    rec["wall_time"] = e.wall_time
                out[k] = rec
            return out


class RowOracle:
    """Counted read access to the rows of ``diag(scale) @ A``.

    ``scale`` is an optional length-n vector; the oracle for ``S^{-1} A``
    uses ``scale = 1/s``. Each row handed out costs one query against
    ``label``.
    """

    def __init__(self, A, ledger: Optional[CostLedger] = None, label: str = "rows", scale=None):
        self.A = np.asarray(A, dtype=float)
        if self.A.ndim != 2:
            raise ShapeError("A must be two-dimensional")
        self.ledger = ledger if ledger is not None else CostLedger()
        self.label = label
        self.scale = None if scale is None else np.asarray(scale, dtype=float)
        if self.scale is not None and self.scale.shape != (self.A.shape[0],):
            raise ShapeError("scale must have length n")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def d(self):
        return self.A.shape[1]

    def _check(self, idx):
        if idx.size and (idx.min() < 0 or idx.max() >= self.n):
            bad = idx[(idx < 0) | (idx >= self.n)][0]
            raise BoundsError(f"row index {int(bad)} outside [0, {self.n})")

    def rows(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64).ravel()
        self._check(idx)
        self.ledger.charge(self.label, idx.size)
        out = self.A[idx]
        if self.scale is not None:
            out = out * self.scale[idx, None]
        return out

    def row(self, i) -> np.ndarray:
        return self.rows([i])[0]

    def all_rows(self) -> np.ndarray:
        return self.rows(np.arange(self.n))

    def relabel(self, label):
        return RowOracle(self.A, self.ledger, label, self.scale)

    def rescaled(self, extra, label=None):
        """Oracle over ``diag(extra) @ self``; reading a row still costs one query."""
        extra = np.asarray(extra, dtype=float)
        sc = extra if self.scale is None else self.scale * extra
        return RowOracle(self.A, self.ledger, label or self.label, sc)

    def dense_unmetered(self) -> np.ndarray:
        """The full scaled matrix without charging the ledger (test oracles only)."""
        if self.scale is None:
            return self.A.copy()
        return self.A * self.scale[:, None]


def as_oracle(A, ledger=None, label="rows") -> RowOracle:
    if isinstance(A, RowOracle):
        return A
    return RowOracle(A, ledger, label)


def row_query(inst: LpInstance, i: int, ledger: CostLedger, label: str = "row_query"):
    """Return ``(a_i, b_i)`` and charge one query."""
    if not 0 <= i < inst.n:
        raise BoundsError(f"row index {i} outside [0, {inst.n})")
    ledger.charge(label, 1)
    return inst.A[i].copy(), float(inst.b[i])


# --------------------------------------------------------------------------
# lazy halving chain

_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _splitmix(x):
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = x + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class HalvingChain:
    """Nested random subsets ``[n] = A_0 ⊇ A_1 ⊇ ... ⊇ A_L``.

    Row ``i`` passes level ``l`` when the top bit of a keyed hash of
    ``(seed, i, l)`` is set; it belongs to ``A_l`` when it passes every level
    up to ``l``. Nothing of size ``n`` is stored.
    """

    seed: int
    n: int
    d: int
    L: int = field(default=-1)

    def __post_init__(self):
        if self.L < 0:
            object.__setattr__(self, "L", chain_depth(self.n, self.d))

    def passes(self, idx, level):
        idx = np.asarray(idx, dtype=np.uint64)
        key = _splitmix(np.uint64(int(self.seed) & 0xFFFFFFFFFFFFFFFF) ^ _splitmix(np.uint64(level)))
        return (_splitmix(key ^ idx) >> np.uint64(63)) == 1

    def member(self, idx, level) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.uint64)
        out = np.ones(idx.shape, dtype=bool)
        for lv in range(1, int(level) + 1):
            out &= self.passes(idx, lv)
        return out

    def level_indices(self, level) -> np.ndarray:
        """Sorted indices of ``A_level``."""
        idx = np.arange(self.n, dtype=np.uint64)
        return np.flatnonzero(self.member(idx, level))

    def depths(self) -> np.ndarray:
        """Deepest level each row reaches (capped at ``L``)."""
        idx = np.arange(self.n, dtype=np.uint64)
        depth = np.zeros(self.n, dtype=np.int64)
        alive = np.ones(self.n, dtype=bool)
        for lv in range(1, self.L + 1):
            alive &= self.passes(idx, lv)
            depth += alive
        return depth


def chain_depth(n, d) -> int:
    return max(0, math.ceil(math.log2(n / d))) if n > d else 0


def chain_member(chain: HalvingChain, i: int, level: int) -> bool:
    if not 0 <= level <= chain.L:
        raise DomainError(f"level {level} outside [0, {chain.L}]")
    return bool(chain.member(np.array([i]), level)[0])


# --------------------------------------------------------------------------
# modeled quantum costs


class CostKind(str, enum.Enum):
    SpectralApprox = "SpectralApprox"
    LeverageScores = "LeverageScores"
    LewisWeights = "LewisWeights"
    MatVec = "MatVec"
    HessianLog = "HessianLog"
    HessianVol = "HessianVol"
    HessianLewis = "HessianLewis"
    GradLog = "GradLog"
    GradVol = "GradVol"
    GradLewis = "GradLewis"


# leading-order row-query counts, polylog factors and constants dropped
_COST = {
    CostKind.SpectralApprox: lambda n, d, e: math.sqrt(n * d) / e,
    CostKind.LeverageScores: lambda n, d, e: math.sqrt(n * d) / e,
    CostKind.LewisWeights: lambda n, d, e: math.sqrt(n) * d**1.5 / e**2,
    CostKind.MatVec: lambda n, d, e: math.sqrt(n) * d / e,
    CostKind.HessianLog: lambda n, d, e: math.sqrt(n * d) / e,
    CostKind.HessianVol: lambda n, d, e: math.sqrt(n * d) / e,
    CostKind.HessianLewis: lambda n, d, e: math.sqrt(n) * d**1.5 / e**2,
    CostKind.GradLog: lambda n, d, e: math.sqrt(n) * d / e,
    CostKind.GradVol: lambda n, d, e: math.sqrt(n) * d / e,
    CostKind.GradLewis: lambda n, d, e: math.sqrt(n) * d**2.5 / e**2,
}


def modeled_quantum_cost(kind, n, d, eps) -> float:
    """Modeled quantum row-query count for one call of ``kind``.

    ========================  ===========================
    SpectralApprox            sqrt(n d) / eps
    LeverageScores            sqrt(n d) / eps
    LewisWeights              sqrt(n) d^1.5 / eps^2
    MatVec                    sqrt(n) d / eps  (eps = delta / ||v||_inf)
    HessianLog, HessianVol    sqrt(n d) / eps
    HessianLewis              sqrt(n) d^1.5 / eps^2
    GradLog, GradVol          sqrt(n) d / eps
    GradLewis                 sqrt(n) d^2.5 / eps^2
    ========================  ===========================
    """
    kind = CostKind(kind)
    if not (eps > 0 and eps <= 1):
        raise DomainError(f"eps must lie in (0, 1], got {eps}")
    if not (n >= d >= 1):
        raise DomainError(f"need n >= d >= 1, got n={n}, d={d}")
    return float(_COST[kind](n, d, eps))


# --------------------------------------------------------------------------
# generators


def gen_random_tall_lp(n: int, d: int, seed: int) -> LpInstance:
    """Random bounded LP with a certified interior point ``x0``.

    The first ``2d`` rows encode the box ``-1 <= x_j <= 1``; the rest have
    entries uniform in ``[-1, 1]`` and right-hand sides placed so that ``x0``
    has slack in ``[0.05, 1]``.
    """
    if n < 2 * d:
        raise DomainError("need n >= 2d to fit the bounding box")
    rng = substream(seed, "gen_random_tall_lp")
    x0 = rng.uniform(-0.5, 0.5, size=d)
    m = n - 2 * d
    R = rng.uniform(-1.0, 1.0, size=(m, d))
    s = rng.uniform(0.05, 1.0, size=m)
    eye = np.eye(d)
    A = np.vstack([eye, -eye, R])
    b = np.concatenate([-np.ones(2 * d), R @ x0 - s])
    c = rng.uniform(-1.0, 1.0, size=d)
    while np.linalg.norm(c) < 1e-3:
        c = rng.uniform(-1.0, 1.0, size=d)
    return LpInstance(A, b, c, x0)


def gen_search_hard_matrix(n: int, d: int, z) -> np.ndarray:
    """Block matrix whose ``j``-th block of ``n/d`` rows holds ``z_j`` in column ``j``."""
    if d < 1 or n % d:
        raise ShapeError(f"d={d} must divide n={n}")
    m = n // d
    Z = np.asarray(z, dtype=float)
    if Z.shape != (d, m):
        raise ShapeError(f"need d={d} bitstrings of length {m}")
    if not np.all((Z == 0) | (Z == 1)):
        raise DomainError("bitstring entries must be 0 or 1")
    A = np.zeros((n, d))
    for j in range(d):
        A[j * m : (j + 1) * m, j] = Z[j]
    return A


def one_d_box() -> LpInstance:
    """``{0 <= x <= 1}`` with cost ``x``; handy for analytic checks."""
    return LpInstance(np.array([[1.0], [-1.0]]), np.array([0.0, -1.0]), np.array([1.0]), np.array([0.5]))
