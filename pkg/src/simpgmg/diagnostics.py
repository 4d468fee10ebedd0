"""Spectral probes and bound calculators for the preconditioned operator.

The Lanczos probe estimates the effective condition number of the applied
left-preconditioned operator from the ratio of its extreme Ritz values. The
operator is probed as applied - possible floating-point asymmetry is accepted
and the result read as a screening scalar, not a certificate. The product
EPS_BF16 * kappa_eff < 1 is the admissibility screen for the reduced-precision
fine level; it is a diagnostic only, not a convergence classifier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .precision import EPS_BF16
from .prng import gaussian_unit_vector

#: Default Lanczos step count; full reorthogonalization keeps it reliable.
LANCZOS_STEPS = 40

#: Relative breakdown threshold on the new off-diagonal.
_BREAKDOWN = 1e-14


@dataclass(frozen=True)
class SpectralProbe:
    m: int
    seed: int
    kappa_eff: float
    eps_kappa: float
    lambda_min: float
    lambda_max: float
    partial: bool  # True when Lanczos broke down before m steps


def lanczos_kappa_eff(apply_MK, n: int, m: int = LANCZOS_STEPS,
                      seed: int = 0) -> SpectralProbe:
    """m-step Lanczos condition-number probe of the applied operator.

    Starts from a seeded normalized Gaussian vector and reorthogonalizes
    against the full stored basis every step (m is small, so this is cheap).
    The basis inner products produced by that reorthogonalization are kept as
    the full projected matrix, and the Ritz values are its eigenvalues: for
    an exactly self-adjoint operator this is the classical tridiagonal pair,
    while for the mildly non-normal applied cycle it avoids the bias a bare
    three-term recurrence picks up. Early breakdown returns the Ritz values
    accumulated so far, flagged partial.
    """
    if m < 2:
        raise ValueError("need at least two Lanczos steps")
    Q = np.zeros((m, n))
    Q[0] = gaussian_unit_vector(n, seed)
    H = np.zeros((m, m))
    used = m
    partial = False
    for j in range(m):
        w = np.asarray(apply_MK(Q[j]), dtype=np.float64)
        h = Q[: j + 1] @ w
        H[: j + 1, j] = h
        w -= Q[: j + 1].T @ h
        h2 = Q[: j + 1] @ w  # second pass keeps the basis orthonormal
        H[: j + 1, j] += h2
        w -= Q[: j + 1].T @ h2
        if j == m - 1:
            break
        bnorm = float(np.linalg.norm(w))
        if not np.isfinite(bnorm) or bnorm < _BREAKDOWN:
            used = j + 1
            partial = True
            break
        H[j + 1, j] = bnorm
        Q[j + 1] = w / bnorm
    ritz = np.sort(np.linalg.eigvals(H[:used, :used]).real)
    lam_min, lam_max = float(ritz[0]), float(ritz[-1])
    kappa = lam_max / lam_min if lam_min != 0.0 else np.inf
    return SpectralProbe(m, seed, float(kappa), float(EPS_BF16 * kappa),
                         lam_min, lam_max, partial)


def bf16_screen(probe: SpectralProbe) -> bool:
    """True iff eps_BF16 * kappa_eff < 1 (strict); diagnostic only."""
    return bool(probe.eps_kappa < 1.0)


def kappa_bound(rho: float) -> float:
    """Idealized bound (1+rho)/(1-rho) on kappa_eff from the cycle's
    error-propagation spectral radius rho < 1."""
    if not (0.0 <= rho < 1.0):
        raise ValueError(f"spectral radius must lie in [0, 1), got {rho}")
    return (1.0 + rho) / (1.0 - rho)
