"""Matrix-free Galerkin geometric multigrid for frozen 3D SIMP elasticity.

The package solves K(E) u = f on structured hexahedral grids where the
per-element modulus field E is frozen for the duration of one linear solve.
The finest operator stays matrix-free; coarse operators are Galerkin
products; smoothing is Chebyshev-Jacobi or damped Jacobi under per-level
precision tags (FP64 / FP32 / emulated BF16); outer solves are PCG or
restarted flexible GMRES with true-residual acceptance.
"""

from .diagnostics import SpectralProbe, bf16_screen, kappa_bound, lanczos_kappa_eff
from .element import ElementStiffness, unit_element_stiffness
from .fine_operator import FineOperator
from .grid import StructuredGrid, build_cantilever, make_grid
from .hierarchy import (CoarsestSolve, GmgHierarchy, build_hierarchy,
                        symmetry_defect)
from .krylov import SolveReport, SolverConfig, fgmres, flat_jacobi_pcg, pcg
from .precision import EPS_BF16, PrecisionTag, round_bf16
from .prng import SplitMix64
from .smoothers import (SmootherConfig, chebyshev_band_bound, chebyshev_smooth,
                        estimate_lambda_max, jacobi_smooth)
from .states import DensityField, ModulusField, make_state, simp_modulus
from .transfer import (CoarseningUnavailableError, TransferPair, assemble_level1,
                       build_transfer, triple_product)

__version__ = "0.1.0"

__all__ = [
    "EPS_BF16", "CoarseningUnavailableError", "CoarsestSolve", "DensityField",
    "ElementStiffness", "FineOperator", "GmgHierarchy", "ModulusField",
    "PrecisionTag", "SolveReport", "SolverConfig", "SmootherConfig",
    "SpectralProbe", "SplitMix64", "StructuredGrid", "TransferPair",
    "assemble_level1", "bf16_screen", "build_cantilever", "build_hierarchy",
    "build_transfer", "chebyshev_band_bound", "chebyshev_smooth",
    "estimate_lambda_max", "fgmres", "flat_jacobi_pcg", "jacobi_smooth",
    "kappa_bound", "lanczos_kappa_eff", "make_grid", "make_state", "pcg",
    "round_bf16", "simp_modulus", "symmetry_defect", "triple_product",
    "unit_element_stiffness",
]
