"""Hierarchy construction, V-/W-cycle application, and the coarsest solve.

Level 0 holds the matrix-free fine operator; levels 1..L hold assembled CSR
operators (level 1 by element-wise Galerkin aggregation, deeper levels by
sparse triple products). Requested depth is clamped, with a warning, at the
first odd grid dimension. The coarsest level is solved by dense Cholesky when
it has at most DENSE_CHOLESKY_CUTOFF free DOFs and by a fixed-count
Jacobi-PCG otherwise; either way the operator is regularized by
eps = max(mean_diag * 1e-8, 1e-14) times the identity.

Precision policies assign one tag per level. Tags apply to the smoother
arithmetic and the level matvecs inside the cycle; transfers, residual
combinations, and the coarsest solve stay in FP64. The outer Krylov solver
always sees an FP64 vector in and out.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .fine_operator import FineOperator
from .precision import PrecisionTag, round_bf16
from .prng import SplitMix64
from .smoothers import SmootherConfig, chebyshev_smooth, estimate_lambda_max, jacobi_smooth
from .transfer import (CoarseningUnavailableError, TransferPair, assemble_level1,
                       build_transfer, triple_product)

DENSE_CHOLESKY_CUTOFF = 5000
COARSE_PCG_STEPS = 80
COARSE_SMOOTH_STEPS = 2

#: Power-iteration budget per level (fine level, assembled levels).
POWER_ITERS_FINE = 20
POWER_ITERS_COARSE = 10

#: Safety factor on the power-iteration estimate before Chebyshev targeting.
#: The Rayleigh quotient converges to lambda_max from below and still sits a
#: few percent short after the fixed budget on larger grids; the band-optimal
#: polynomial amplifies modes above its target interval, so smoothing at the
#: raw estimate makes the cycle (mildly) divergent on those modes. The
#: inflation keeps the spectrum inside the band at the cost of a slightly
#: wider interval.
LAMBDA_SAFETY = 1.1

#: Relative drift of max_e E_e beyond which cached spectral estimates expire.
LAMBDA_CACHE_DRIFT = 0.10

PRECISION_POLICIES = {
    "fp64": (PrecisionTag.FP64,),
    "fp32": (PrecisionTag.FP32, PrecisionTag.FP64),
    "bf16": (PrecisionTag.BF16EMU, PrecisionTag.FP32, PrecisionTag.FP64),
}


def policy_tags(policy: str, n_levels: int) -> list[PrecisionTag]:
    """Per-level precision tags; the last policy entry repeats downward."""
    if policy not in PRECISION_POLICIES:
        raise ValueError(f"unknown precision policy {policy!r}")
    seq = PRECISION_POLICIES[policy]
    return [seq[min(i, len(seq) - 1)] for i in range(n_levels)]


class _Level:
    """One hierarchy level: operator, diagonal, spectral estimate, tag."""

    def __init__(self, index, operator, tag, smoother, lam_seed, lam_iters,
                 lam_max=None):
        self.index = index
        self.operator = operator
        self.tag = tag
        self.smoother = smoother
        self.is_fine = isinstance(operator, FineOperator)
        if self.is_fine:
            self.n_free = operator.n_free
            diag = operator.diagonal()
        else:
            self.n_free = operator.shape[0]
            diag = operator.diagonal()
            diag = np.maximum(diag, 1e-14 * diag.mean())
            if tag is not PrecisionTag.FP64:
                self._op32 = operator.astype(np.float32)
            if tag is PrecisionTag.BF16EMU:
                self._op_bf16 = self._op32.copy()
                self._op_bf16.data = round_bf16(self._op32.data)
        self.diag = diag
        self.diag_inv = 1.0 / diag
        self._diag_inv32 = self.diag_inv.astype(np.float32)
        if lam_max is None:
            lam_max = LAMBDA_SAFETY * estimate_lambda_max(
                self.matvec64, self.diag_inv, iters=lam_iters, seed=lam_seed)
        self.lam_max = lam_max
        self.transfer: TransferPair | None = None

    def matvec64(self, x: np.ndarray) -> np.ndarray:
        if self.is_fine:
            return self.operator.matvec_tagged(x, PrecisionTag.FP64)
        return self.operator @ x

    def matvec_tagged(self, x: np.ndarray):
        tag = self.tag
        if self.is_fine:
            return self.operator.matvec_tagged(np.asarray(x, tag.working_dtype), tag)
        if tag is PrecisionTag.FP64:
            return self.operator @ np.asarray(x, np.float64)
        if tag is PrecisionTag.BF16EMU:
            return self._op_bf16 @ round_bf16(np.asarray(x, np.float32))
        return self._op32 @ np.asarray(x, np.float32)

    def smooth(self, b: np.ndarray, x0: np.ndarray | None) -> np.ndarray:
        cfg = self.smoother
        dinv = self.diag_inv if self.tag is PrecisionTag.FP64 else self._diag_inv32
        if cfg.kind == "chebyshev":
            return chebyshev_smooth(self.matvec_tagged, b, x0, dinv, self.lam_max,
                                    cfg.degree, cfg.alpha, self.tag)
        return jacobi_smooth(self.matvec_tagged, b, x0, dinv, cfg.omega,
                             cfg.degree, self.tag)


@dataclass
class CoarsestSolve:
    """Regularized coarsest-level solver: dense Cholesky or fixed PCG."""

    mode: str          # "dense_cholesky" | "pcg80"
    eps: float
    _factor: tuple | None = field(default=None, repr=False)
    _level: _Level | None = field(default=None, repr=False)
    pcg_steps: int = COARSE_PCG_STEPS

    def solve(self, r: np.ndarray) -> np.ndarray:
        if self.mode == "dense_cholesky":
            return sla.cho_solve(self._factor, r)
        return _fixed_jacobi_pcg(self._level, self.eps, r, self.pcg_steps)


def _fixed_jacobi_pcg(level: _Level, eps: float, b: np.ndarray, steps: int) -> np.ndarray:
    """Fixed-count Jacobi-PCG on the regularized coarsest operator."""
    apply_K = lambda v: level.matvec64(v) + eps * v
    dinv = 1.0 / (level.diag + eps)
    x = np.zeros_like(b)
    r = b.copy()
    z = dinv * r
    p = z
    rz = float(r @ z)
    for _ in range(steps):
        q = apply_K(p)
        pq = float(p @ q)
        if pq <= 0.0 or not np.isfinite(pq):
            break
        a = rz / pq
        x = x + a * p
        r = r - a * q
        z = dinv * r
        rz_new = float(r @ z)
        if rz_new <= 0.0 or not np.isfinite(rz_new):
            break
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x


def _build_coarsest(level: _Level, cutoff: int, pcg_steps: int) -> CoarsestSolve:
    eps = max(float(level.diag.mean()) * 1e-8, 1e-14)
    if level.n_free <= cutoff:
        if level.is_fine:
            A = level.operator.assemble_dense()
        else:
            A = level.operator.toarray()
        A = A + eps * np.eye(level.n_free)
        try:
            factor = sla.cho_factor(A, lower=True)
            return CoarsestSolve("dense_cholesky", eps, factor, level, pcg_steps)
        except np.linalg.LinAlgError:
            pass  # fall through to the iterative budget
    return CoarsestSolve("pcg80", eps, None, level, pcg_steps)


class GmgHierarchy:
    """Immutable multigrid hierarchy over one frozen modulus field."""

    def __init__(self, levels: list[_Level], coarsest: CoarsestSolve, policy: str,
                 max_modulus: float):
        self.levels = levels
        self.coarsest = coarsest
        self.policy = policy
        self.max_modulus = max_modulus

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def n_free(self) -> int:
        return self.levels[0].n_free

    def vcycle(self, r: np.ndarray) -> np.ndarray:
        """One V-cycle with zero initial guess applied to a fine residual."""
        return self._cycle(0, np.asarray(r, np.float64), 1)

    def wcycle(self, r: np.ndarray) -> np.ndarray:
        """One W-cycle (two coarse visits with a residual update between)."""
        return self._cycle(0, np.asarray(r, np.float64), 2)

    def _cycle(self, l: int, r: np.ndarray, gamma: int) -> np.ndarray:
        if l == self.n_levels - 1:
            return self.coarsest.solve(r)
        lev = self.levels[l]
        t = lev.transfer
        x = lev.smooth(r, None)
        for _ in range(gamma):
            d = r - np.asarray(lev.matvec_tagged(x), np.float64)
            x = x + t.prolong(self._cycle(l + 1, t.restrict(d), gamma))
        return lev.smooth(r, x)


def build_hierarchy(op: FineOperator, levels: int = 4, policy: str = "fp32",
                    smoother: SmootherConfig | None = None, *,
                    coarse_smooth_steps: int = COARSE_SMOOTH_STEPS,
                    cholesky_cutoff: int = DENSE_CHOLESKY_CUTOFF,
                    coarse_pcg_steps: int = COARSE_PCG_STEPS,
                    power_seed: int = 0,
                    lambda_cache: GmgHierarchy | None = None) -> GmgHierarchy:
    """Build transfers, Galerkin operators, diagonals, and spectral estimates.

    `levels` is the requested depth (>= 1); it is clamped with a warning at
    the first odd grid dimension. `lambda_cache` may pass a previous
    hierarchy of identical shape: its per-level spectral estimates are reused
    when max_e E_e moved by at most 10%, mirroring the cheap SIMP-drift proxy.
    """
    if levels < 1:
        raise ValueError("need at least one level")
    smoother = smoother or SmootherConfig()
    max_E = float(np.max(op.modulus.E))

    cached_lams = None
    if lambda_cache is not None and lambda_cache.max_modulus > 0:
        drift = abs(max_E - lambda_cache.max_modulus) / lambda_cache.max_modulus
        if drift <= LAMBDA_CACHE_DRIFT:
            cached_lams = [lev.lam_max for lev in lambda_cache.levels]

    coarse_cfg = SmootherConfig(smoother.kind, coarse_smooth_steps,
                                smoother.alpha, smoother.omega)

    # transfers and coarse operators first, then tags once depth is known
    operators: list = [op]
    transfers: list[TransferPair] = []
    grid = op.grid
    while len(operators) < levels:
        try:
            t = build_transfer(grid)
        except CoarseningUnavailableError:
            warnings.warn(
                f"hierarchy clamped to {len(operators)} levels: grid "
                f"({grid.nx},{grid.ny},{grid.nz}) has an odd dimension",
                stacklevel=2)
            break
        if t.coarse.n_free == 0:
            break
        if len(operators) == 1:
            K = assemble_level1(op, t)
        else:
            K = triple_product(t.P, operators[-1])
        transfers.append(t)
        operators.append(K)
        grid = t.coarse

    tags = policy_tags(policy, len(operators))
    built: list[_Level] = []
    for i, K in enumerate(operators):
        cfg = smoother if i == 0 else coarse_cfg
        iters = POWER_ITERS_FINE if i == 0 else POWER_ITERS_COARSE
        lam = cached_lams[i] if cached_lams is not None and i < len(cached_lams) else None
        lev = _Level(i, K, tags[i], cfg, power_seed + i, iters, lam_max=lam)
        built.append(lev)
    for i, t in enumerate(transfers):
        built[i].transfer = t

    coarsest = _build_coarsest(built[-1], cholesky_cutoff, coarse_pcg_steps)
    return GmgHierarchy(built, coarsest, policy, max_E)


def symmetry_defect(h: GmgHierarchy, n_trials: int = 10, seed: int = 0) -> float:
    """max |<Mx, y> - <x, My>| / (|x||y|) over seeded random probe pairs."""
    if n_trials < 1:
        raise ValueError("need at least one trial")
    gen = SplitMix64(seed)
    n = h.n_free
    worst = 0.0
    for _ in range(n_trials):
        x = gen.gaussian(n)
        y = gen.gaussian(n)
        d = abs(float(h.vcycle(x) @ y) - float(x @ h.vcycle(y)))
        worst = max(worst, d / (np.linalg.norm(x) * np.linalg.norm(y)))
    return worst
