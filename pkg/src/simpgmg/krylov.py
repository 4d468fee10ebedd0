"""Outer Krylov solvers: preconditioned CG and restarted flexible GMRES.

Both solvers run in FP64, record per-iteration relative recurrence residuals,
and accept a solution only after an independent FP64 true-residual check
||b - Kx|| / ||b|| < tol on the returned iterate; the recurrence residual
alone never decides convergence. Iteration caps, stagnant residual
histories, and non-finite iterates are recorded as failures in the report
rather than raised.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .precision import PrecisionTag

#: Happy-breakdown threshold on the new Hessenberg entry.
HAPPY_BREAKDOWN = 1e-14

#: Stagnation rule: the best relative residual must improve by at least
#: this fraction over this many iterations.
STAGNATION_WINDOW = 50
STAGNATION_IMPROVEMENT = 0.01


@dataclass(frozen=True)
class SolverConfig:
    method: str = "pcg"      # "pcg" | "fgmres"
    tol: float = 1e-6        # relative residual target
    maxiter: int = 200
    restart: int = 32        # fgmres only
    record_history: bool = True

    def __post_init__(self):
        if self.method not in ("pcg", "fgmres"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.tol <= 0 or self.maxiter < 1 or self.restart < 1:
            raise ValueError("tol must be positive and iteration counts >= 1")


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    final_true_residual: float
    failure_kind: str                     # none | cap | stagnation | non_finite
    residual_history: list[float] = field(default_factory=list)
    wall_time: float = 0.0
    x: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self, include_history: bool = True) -> dict:
        d = {
            "converged": self.converged,
            "iterations": self.iterations,
            "final_true_residual": self.final_true_residual,
            "failure_kind": self.failure_kind,
            "wall_time": self.wall_time,
        }
        if include_history:
            d["residual_history"] = list(self.residual_history)
        return d


class _Monitor:
    """Shared history / stagnation / cap bookkeeping."""

    def __init__(self, cfg: SolverConfig, normb: float):
        self.cfg = cfg
        self.normb = normb
        self.history: list[float] = []
        self.best: list[float] = []

    def record(self, relres: float) -> str | None:
        """Store one iteration; returns a failure kind or None."""
        self.history.append(relres)
        prev = self.best[-1] if self.best else np.inf
        self.best.append(min(prev, relres))
        if not np.isfinite(relres):
            return "non_finite"
        return None

    def stagnant(self) -> bool:
        """No >=1% improvement of the best residual over the last window.

        Consulted only where stopping is safe (a recurrence-passed iterate
        was rejected by the true residual); plain slow convergence runs to
        the iteration cap and is reported as such.
        """
        k = len(self.best)
        if k <= STAGNATION_WINDOW:
            return False
        then = self.best[k - 1 - STAGNATION_WINDOW]
        return not (self.best[-1] <= (1.0 - STAGNATION_IMPROVEMENT) * then)

    def finish(self, apply_K, b, x, kind: str, t0: float) -> SolveReport:
        true_res = float(np.linalg.norm(b - apply_K(x)) / self.normb)
        converged = bool(np.isfinite(true_res) and true_res < self.cfg.tol)
        return SolveReport(
            converged=converged,
            iterations=len(self.history),
            final_true_residual=true_res,
            failure_kind="none" if converged else kind,
            residual_history=self.history if self.cfg.record_history else [],
            wall_time=time.perf_counter() - t0,
            x=x,
        )


def pcg(apply_K, apply_M, b: np.ndarray, cfg: SolverConfig) -> SolveReport:
    """Left-preconditioned conjugate gradients with true-residual acceptance.

    apply_M must behave as one fixed linear operator for the duration of the
    call (a frozen multigrid cycle qualifies). When the recurrence residual
    passes tol but the recomputed true residual does not, the recurrence
    target is tightened tenfold and the iteration continues.
    """
    t0 = time.perf_counter()
    b = np.asarray(b, dtype=np.float64)
    normb = float(np.linalg.norm(b))
    if normb == 0.0:
        return SolveReport(True, 0, 0.0, "none", [], time.perf_counter() - t0,
                           np.zeros_like(b))
    mon = _Monitor(cfg, normb)
    x = np.zeros_like(b)
    r = b.copy()
    z = apply_M(r)
    p = np.asarray(z, dtype=np.float64)
    rz = float(r @ p)
    target = cfg.tol
    kind = "cap"
    for _ in range(cfg.maxiter):
        q = np.asarray(apply_K(p), dtype=np.float64)
        pq = float(p @ q)
        if not np.isfinite(pq) or pq == 0.0:
            kind = "non_finite"
            break
        a = rz / pq
        x = x + a * p
        r = r - a * q
        relres = float(np.linalg.norm(r) / normb)
        fail = mon.record(relres)
        if fail:
            kind = fail
            break
        if relres < target:
            true_res = float(np.linalg.norm(b - apply_K(x)) / normb)
            if true_res < cfg.tol:
                kind = "none"
                break
            if mon.stagnant():
                kind = "stagnation"
                break
            target *= 0.1  # recurrence drifted from the true residual
        z = np.asarray(apply_M(r), dtype=np.float64)
        rz_new = float(r @ z)
        if not np.isfinite(rz_new):
            kind = "non_finite"
            break
        p = z + (rz_new / rz) * p
        rz = rz_new
    return mon.finish(apply_K, b, x, kind, t0)


def fgmres(apply_K, apply_M, b: np.ndarray, cfg: SolverConfig) -> SolveReport:
    """Restarted right-preconditioned flexible GMRES.

    Modified Gram-Schmidt Arnoldi with Givens rotations for the incremental
    QR update; the preconditioner may change between iterations (the Z basis
    is stored). A new Hessenberg entry below HAPPY_BREAKDOWN terminates the
    cycle with the exact Krylov-subproblem solution; a singular triangular
    solve falls back to least squares.
    """
    t0 = time.perf_counter()
    b = np.asarray(b, dtype=np.float64)
    normb = float(np.linalg.norm(b))
    if normb == 0.0:
        return SolveReport(True, 0, 0.0, "none", [], time.perf_counter() - t0,
                           np.zeros_like(b))
    mon = _Monitor(cfg, normb)
    n = b.size
    m = cfg.restart
    x = np.zeros_like(b)
    kind = "cap"
    done = False
    while not done and len(mon.history) < cfg.maxiter:
        r = b - np.asarray(apply_K(x), dtype=np.float64)
        beta = float(np.linalg.norm(r))
        if not np.isfinite(beta):
            kind = "non_finite"
            break
        if beta / normb < cfg.tol:
            kind = "none"
            break
        V = np.zeros((m + 1, n))
        Z = np.zeros((m, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        j_used = 0
        claimed = False  # this cycle's recurrence reached tol (or broke down)
        for j in range(m):
            Z[j] = np.asarray(apply_M(V[j]), dtype=np.float64)
            # copy: MGS mutates w in place and apply_K may return its input
            w = np.array(apply_K(Z[j]), dtype=np.float64, copy=True)
            for i in range(j + 1):
                H[i, j] = float(w @ V[i])
                w -= H[i, j] * V[i]
            H[j + 1, j] = float(np.linalg.norm(w))
            if not np.isfinite(H[: j + 2, j]).all():
                kind = "non_finite"
                done = True
                j_used = j + 1
                break
            happy = H[j + 1, j] < HAPPY_BREAKDOWN
            if not happy:
                V[j + 1] = w / H[j + 1, j]
            # apply stored rotations, then create the new one
            for i in range(j):
                h0 = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = h0
            denom = float(np.hypot(H[j, j], H[j + 1, j]))
            if denom == 0.0:
                cs[j], sn[j] = 1.0, 0.0
            else:
                cs[j], sn[j] = H[j, j] / denom, H[j + 1, j] / denom
            H[j, j] = cs[j] * H[j, j] + sn[j] * H[j + 1, j]
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            j_used = j + 1
            relres = abs(g[j + 1]) / normb
            fail = mon.record(float(relres))
            if fail:
                kind = fail
                done = True
                break
            if happy or relres < cfg.tol:
                claimed = True
                break
            if len(mon.history) >= cfg.maxiter:
                break
        if kind == "non_finite":
            break
        if j_used > 0:
            y = _solve_upper(H[:j_used, :j_used], g[:j_used])
            x = x + Z[:j_used].T @ y
        if done:
            break
        true_res = float(np.linalg.norm(b - apply_K(x)) / normb)
        if true_res < cfg.tol:
            kind = "none"
            break
        if claimed and mon.stagnant():
            # the recurrence reached tol but the FP64 truth disagrees and the
            # best residual has flatlined: further restarts are pointless
            kind = "stagnation"
            break
        if len(mon.history) >= cfg.maxiter:
            kind = "cap"
            break
    return mon.finish(apply_K, b, x, kind, t0)


def _solve_upper(R: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Back-substitution with a least-squares fallback on singular R."""
    with np.errstate(divide="ignore", invalid="ignore"):
        try:
            y = sla.solve_triangular(R, g, lower=False, check_finite=False)
        except Exception:
            y = None
    if y is None or not np.isfinite(y).all():
        y, *_ = np.linalg.lstsq(R, g.copy(), rcond=None)
    return y


def flat_jacobi_pcg(op, b: np.ndarray, cfg: SolverConfig) -> SolveReport:
    """Baseline comparator: PCG with the inverse fine diagonal alone."""
    dinv = 1.0 / op.diagonal()
    return pcg(lambda v: op.matvec_tagged(v, PrecisionTag.FP64),
               lambda r: dinv * r, b, cfg)
