"""Sketched interior point methods for tall linear programs.

Spectral sketches by repeated halving, Lewis weights, mat-vec estimation by
median of means, and path following with log, volumetric, hybrid and Lewis
barriers. A cost ledger pairs classical row-query counts with modeled
quantum query counts.
"""

from .barrier import BarrierKind, barrier_value, complexity, gradient_estimate, hessian_sketch
from .errors import (
    BoundsError,
    BoundViolation,
    DomainError,
    InfeasibleInterior,
    NonConvergence,
    RankDeficientError,
    ShapeError,
    SketchIPMError,
)
from .ipm import NewtonParams, SolveResult, path_follow
from .lewis import LewisParams, LewisResult, fp_lewis_weights, multiplicative_lewis_weights, reference_lewis_weights
from .matvec import MatVecRequest, estimate_matvec
from .oracle import CostKind, CostLedger, HalvingChain, LpInstance, RowOracle, gen_random_tall_lp, load_lp, save_lp
from .sketch import SpectralSketch, approximate_leverage_scores, leverage_scores_exact, repeated_halving

__version__ = "0.1.0"
