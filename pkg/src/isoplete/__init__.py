"""Matrix completion under deterministic sampling.

Identifiability diagnostics (isomerism, relative condition numbers),
closed-form dictionary recovery, convex / bilinear / IsoDP completion
solvers, circulant-embedding forecasting and the experiment protocols
built on top of them.
"""

from .linalg import SkinnySvd, coherence, pinv, skinny_svd, svt
from .sampling import (
    PartialMatrix,
    SamplingSet,
    gen_diagonal_band_mask,
    gen_uniform_mask,
    mask_from_convolution,
)
from .diagnostics import DiagnosticsReport, diagnose, gamma_pair, is_pair_isomeric
from .solvers import (
    SolveResult,
    SolverConfig,
    solve_bilinear_frobenius,
    solve_convex_nuclear,
    solve_isodp,
)

__version__ = "0.1.0"

__all__ = [
    "SkinnySvd",
    "coherence",
    "pinv",
    "skinny_svd",
    "svt",
    "PartialMatrix",
    "SamplingSet",
    "gen_diagonal_band_mask",
    "gen_uniform_mask",
    "mask_from_convolution",
    "DiagnosticsReport",
    "diagnose",
    "gamma_pair",
    "is_pair_isomeric",
    "SolveResult",
    "SolverConfig",
    "solve_bilinear_frobenius",
    "solve_convex_nuclear",
    "solve_isodp",
]
