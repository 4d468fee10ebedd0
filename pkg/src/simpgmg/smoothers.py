"""Chebyshev-Jacobi and damped-Jacobi smoothers, spectral-radius estimation.

The Chebyshev smoother targets the band [alpha*lam_max, lam_max] of the
diagonally scaled operator; after nu steps its residual polynomial on that
band is bounded by ``chebyshev_band_bound(nu, alpha)``.

Precision tags govern the smoother arithmetic: FP64 is the exact path, FP32
carries every vector update in single precision, and BF16 emulation rounds
operator inputs at the matvec boundary (inside the operator) while the
recurrence itself runs in FP32. Smoothers always return float64; corrections
are promoted on exit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .precision import PrecisionTag
from .prng import gaussian_unit_vector

#: Default lower fraction of the Chebyshev target band.
CHEBYSHEV_ALPHA = 1.0 / 30.0

#: Damped-Jacobi weight cap.
OMEGA_MAX = 0.5

#: Floor applied to power-iteration spectral-radius estimates.
LAMBDA_FLOOR = 1e-6


@dataclass(frozen=True)
class SmootherConfig:
    """Smoother selection shared by all hierarchy levels.

    degree is the Chebyshev polynomial degree or the damped-Jacobi step
    count, whichever kind is active.
    """

    kind: str = "chebyshev"  # "chebyshev" | "jacobi"
    degree: int = 2
    alpha: float = CHEBYSHEV_ALPHA
    omega: float = OMEGA_MAX

    def __post_init__(self):
        if self.kind not in ("chebyshev", "jacobi"):
            raise ValueError(f"unknown smoother kind {self.kind!r}")
        if self.degree < 1:
            raise ValueError("smoother degree must be at least 1")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("lower fraction alpha must lie in (0, 1)")
        if not (0.0 < self.omega <= OMEGA_MAX):
            raise ValueError(f"jacobi damping must lie in (0, {OMEGA_MAX}]")


def chebyshev_band_bound(nu: int, alpha: float) -> float:
    """Residual-polynomial bound 1/T_nu((1+alpha)/(1-alpha)) on the band."""
    if nu < 1:
        raise ValueError("degree must be at least 1")
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    t = (1.0 + alpha) / (1.0 - alpha)
    return float(1.0 / np.cosh(nu * np.arccosh(t)))


def chebyshev_smooth(apply_op, b, x0, diag_inv, lam_max: float, nu: int,
                     alpha: float = CHEBYSHEV_ALPHA,
                     prec: PrecisionTag = PrecisionTag.FP64) -> np.ndarray:
    """Degree-nu Chebyshev semi-iteration on the diagonally scaled operator.

    Standard semi-iteration targeting [alpha*lam_max, lam_max] with band
    center sigma and half-width delta: the first step is x1 = x0 +
    (2/((1+alpha)*lam_max)) D^-1 r0, and subsequent steps follow the
    three-term coefficient recurrence a_k = 1/(sigma - delta^2 a_{k-1}/4),
    d_k = a_k (D^-1 r_k + (delta^2 a_{k-1}/4) d_{k-1}), where the carried
    a_0 is the recurrence-consistent 2/sigma (the first *step size* above is
    its half). After nu steps the residual polynomial on the band is the
    scaled Chebyshev polynomial bounded by chebyshev_band_bound(nu, alpha).

    x0=None means a zero initial guess (saves the first matvec). apply_op
    must already respect the precision tag internally; this routine casts
    b, x0, and diag_inv to the tag's working dtype and runs the recurrence
    there.
    """
    if lam_max <= 0.0:
        raise ValueError("lam_max must be positive")
    if nu < 1:
        raise ValueError("degree must be at least 1")
    wt = prec.working_dtype
    b = np.asarray(b, dtype=wt)
    dinv = np.asarray(diag_inv, dtype=wt)
    sigma = 0.5 * (lam_max + alpha * lam_max)
    delta = 0.5 * (lam_max - alpha * lam_max)
    if x0 is None:
        x = np.zeros_like(b)
        r = b
    else:
        x = np.asarray(x0, dtype=wt).copy()
        r = b - np.asarray(apply_op(x), dtype=wt)
    d = wt(1.0 / sigma) * (dinv * r)
    x = x + d
    a = 2.0 / sigma  # recurrence-consistent a_0 (first step size is a_0/2)
    for _ in range(1, nu):
        r = b - np.asarray(apply_op(x), dtype=wt)
        c = delta * delta * a / 4.0
        a = 1.0 / (sigma - c)
        d = wt(a) * (dinv * r) + wt(a * c) * d
        x = x + d
    return np.asarray(x, dtype=np.float64)


def jacobi_smooth(apply_op, b, x0, diag_inv, omega: float, steps: int,
                  prec: PrecisionTag = PrecisionTag.FP64) -> np.ndarray:
    """Damped Jacobi: x <- x + omega * D^-1 (b - K x), `steps` times."""
    if not (0.0 < omega <= OMEGA_MAX):
        raise ValueError(f"jacobi damping must lie in (0, {OMEGA_MAX}]")
    if steps < 1:
        raise ValueError("step count must be at least 1")
    wt = prec.working_dtype
    b = np.asarray(b, dtype=wt)
    dinv = np.asarray(diag_inv, dtype=wt)
    if x0 is None:
        x = wt(omega) * (dinv * b)
        steps -= 1
    else:
        x = np.asarray(x0, dtype=wt).copy()
    for _ in range(steps):
        r = b - np.asarray(apply_op(x), dtype=wt)
        x = x + wt(omega) * (dinv * r)
    return np.asarray(x, dtype=np.float64)


def estimate_lambda_max(apply_op, diag_inv, iters: int = 20, seed: int = 0) -> float:
    """Power iteration on D^-1 K from a seeded random start.

    Returns the Rayleigh-quotient estimate at the final step, floored at
    LAMBDA_FLOOR. Runs in FP64 regardless of the operator's solve-time tag.
    """
    if iters < 1:
        raise ValueError("need at least one power iteration")
    dinv = np.asarray(diag_inv, dtype=np.float64)
    v = gaussian_unit_vector(dinv.size, seed)
    lam = 0.0
    for _ in range(iters):
        w = dinv * np.asarray(apply_op(v), dtype=np.float64)
        lam = float(v @ w) / float(v @ v)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            break
        v = w / nrm
    return max(lam, LAMBDA_FLOOR)
