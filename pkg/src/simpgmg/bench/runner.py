"""Experiment execution: validation gates, solves, sweeps, probes, robustness.

Each command returns a report tree {spec, trials, aggregates, gates,
environment}. Gates carry measured margins next to their thresholds; the CLI
maps any failed gate to a nonzero exit code. All numerics are deterministic
for a fixed spec, seed, and worker count; wall-clock fields are the only
nondeterministic values in a report.
"""

from __future__ import annotations

import itertools
import math
import time
import warnings

import numpy as np

from ..diagnostics import bf16_screen, lanczos_kappa_eff
from ..fine_operator import FineOperator
from ..grid import build_cantilever
from ..hierarchy import GmgHierarchy, build_hierarchy
from ..krylov import SolverConfig, SolveReport, fgmres, flat_jacobi_pcg, pcg
from ..precision import PrecisionTag
from ..smoothers import SmootherConfig
from ..states import make_state, simp_modulus
from ..transfer import assemble_level1, build_transfer
from .reports import environment_stamp
from .specs import ROBUSTNESS_CASES, ExperimentSpec

#: Default sweep axes mirroring the screen-tier heterogeneous probe grid.
SWEEP_DEFAULT_GRIDS = ((8, 4, 4), (16, 8, 8))
SWEEP_DEFAULT_VFS = (0.2, 0.5, 0.8)
SWEEP_DEFAULT_PS = (1.5, 3.0, 4.5)


def build_problem(spec: ExperimentSpec, *, grid=None, state=None, vf=None,
                  p=None, floor=None, seed=None):
    """Grid + frozen operator for one experiment cell."""
    dims = tuple(grid if grid is not None else spec.grid)
    g = build_cantilever(*dims)
    rho = make_state(state if state is not None else spec.state, *dims,
                     vf=vf if vf is not None else spec.vf,
                     floor=floor if floor is not None else spec.floor,
                     seed=seed if seed is not None else spec.seed)
    E = simp_modulus(rho, p if p is not None else spec.p, spec.emin, spec.e0)
    return g, FineOperator(g, E, nu=spec.poisson)


def build_gmg(op: FineOperator, spec: ExperimentSpec, *, precision=None,
              levels=None, smoother=None, degree=None) -> GmgHierarchy:
    cfg = SmootherConfig(kind=smoother if smoother is not None else spec.smoother,
                         degree=degree if degree is not None else spec.degree,
                         alpha=spec.alpha, omega=spec.omega)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # depth clamping is expected at odd dims
        return build_hierarchy(
            op, levels if levels is not None else spec.levels,
            precision if precision is not None else spec.precision, cfg,
            coarse_smooth_steps=spec.coarse_smooth_steps,
            cholesky_cutoff=spec.cholesky_cutoff,
            coarse_pcg_steps=spec.coarse_pcg_steps,
            power_seed=spec.power_seed)


def run_solver(op: FineOperator, h: GmgHierarchy | None, spec: ExperimentSpec,
               *, method=None, restart=None, maxiter=None) -> SolveReport:
    b = op.grid.load[op.grid.free_dofs]
    method = method if method is not None else spec.resolved_method()
    cfg = SolverConfig(method="pcg" if method == "jacobi" else method,
                       tol=spec.tol,
                       maxiter=maxiter if maxiter is not None else spec.maxiter,
                       restart=restart if restart is not None else spec.restart)
    if method == "jacobi":
        return flat_jacobi_pcg(op, b, cfg)
    if method == "pcg":
        return pcg(op.matvec, h.vcycle, b, cfg)
    return fgmres(op.matvec, h.vcycle, b, cfg)


def probe_kappa(op: FineOperator, spec: ExperimentSpec,
                h64: GmgHierarchy | None = None):
    """Lanczos probe of the FP64 V-cycle-preconditioned fine operator."""
    if h64 is None:
        h64 = build_gmg(op, spec, precision="fp64")
    apply_MK = lambda v: h64.vcycle(op.matvec_tagged(v, PrecisionTag.FP64))
    return lanczos_kappa_eff(apply_MK, op.n_free, spec.lanczos_steps,
                             spec.lanczos_seed)


def _trial_entry(rep: SolveReport, op: FineOperator, record_history=True) -> dict:
    d = rep.to_dict(include_history=record_history)
    d["compliance"] = op.compliance(rep.x) if rep.x is not None else math.nan
    return d


def _mean_std(values) -> tuple[float, float]:
    v = np.asarray(list(values), dtype=np.float64)
    if v.size == 0:
        return math.nan, math.nan
    return float(v.mean()), float(v.std())


def _report(spec: ExperimentSpec, trials: list, aggregates: dict,
            gates: list) -> dict:
    return {
        "spec": spec.to_dict(),
        "trials": trials,
        "aggregates": aggregates,
        "gates": gates,
        "environment": environment_stamp(),
    }


def _gate(gid: str, description: str, passed: bool, measured, threshold,
          **info) -> dict:
    d = {"id": gid, "description": description, "passed": bool(passed),
         "measured": measured, "threshold": threshold}
    d.update(info)
    return d


# ---------------------------------------------------------------------------
# validate

def cmd_validate(spec: ExperimentSpec) -> dict:
    """Desk-scale analogues of the eight pre-benchmark validation gates."""
    gates = []

    # M1: FP64 V-cycle-PCG against a dense direct solve (8x4x4)
    g, op = build_problem(spec, grid=(8, 4, 4), state="uniform", vf=0.5, p=3.0)
    b = g.load[g.free_dofs]
    h64 = build_gmg(op, spec, precision="fp64")
    rep = pcg(op.matvec, h64.vcycle, b,
              SolverConfig(tol=1e-10, maxiter=spec.maxiter))
    K = op.assemble_dense()
    x_direct = np.linalg.solve(K, b)
    err_vs_direct = float(np.linalg.norm(rep.x - x_direct) / np.linalg.norm(x_direct))
    gates.append(_gate(
        "M1", "FP64 V-cycle-PCG vs dense direct solve, relative residual",
        rep.converged and rep.final_true_residual < 1e-10,
        rep.final_true_residual, 1e-10,
        iterations=rep.iterations, error_vs_direct=err_vs_direct))

    # M2: bounded iteration count on the uniform state (FGMRES gate)
    g2, op2 = build_problem(spec, grid=(16, 8, 8), state="uniform", vf=0.5, p=3.0)
    h2 = build_gmg(op2, spec, precision="fp64")
    rep2 = run_solver(op2, h2, spec, method="fgmres")
    gates.append(_gate(
        "M2", "uniform-density FGMRES iteration gate",
        rep2.converged and rep2.iterations <= 30, rep2.iterations, 30))

    # M3: element-wise Galerkin assembly vs the dense triple-product oracle,
    # plus compliance parity between the matrix-free solve and a direct solve
    for dims in ((4, 2, 2), (8, 4, 4)):
        gm, opm = build_problem(spec, grid=dims, state="uniform", vf=0.5, p=3.0)
        t = build_transfer(gm)
        K1 = assemble_level1(opm, t).toarray()
        Kd = opm.assemble_dense()
        Pd = t.P.toarray()
        ref = Pd.T @ Kd @ Pd
        fro = float(np.linalg.norm(K1 - ref) / np.linalg.norm(ref))
        hm = build_gmg(opm, spec, precision="fp64")
        bm = gm.load[gm.free_dofs]
        repm = pcg(opm.matvec, hm.vcycle, bm,
                   SolverConfig(tol=1e-12, maxiter=spec.maxiter))
        c_mf = opm.compliance(repm.x)
        c_ref = float(bm @ np.linalg.solve(Kd, bm))
        cdiff = abs(c_mf - c_ref) / abs(c_ref)
        label = f"{dims[0]}x{dims[1]}x{dims[2]}"
        gates.append(_gate(
            f"M3-frobenius-{label}",
            "element-wise level-1 Galerkin vs dense P^T K P, rel. Frobenius",
            fro < 1e-10, fro, 1e-10))
        gates.append(_gate(
            f"M3-compliance-{label}",
            "matrix-free solve vs assembled direct solve, compliance rel. diff",
            cdiff < 1e-3, cdiff, 1e-3))

    # M4: Chebyshev degree 2/4 and damped Jacobi all converge within 50
    for label, smoother, degree in (("chebyshev-2", "chebyshev", 2),
                                    ("chebyshev-4", "chebyshev", 4),
                                    ("jacobi-2", "jacobi", 2)):
        h4 = build_gmg(op2, spec, precision="fp64", smoother=smoother,
                       degree=degree)
        rep4 = run_solver(op2, h4, spec, method="pcg")
        gates.append(_gate(
            f"M4-{label}", "smoother comparison iteration gate",
            rep4.converged and rep4.iterations <= 50, rep4.iterations, 50))

    # M5: SIMP sanity probes across penalization values
    for p in (1.5, 3.0, 4.5):
        g5, op5 = build_problem(spec, grid=(16, 8, 8), state="uniform",
                                vf=0.5, p=p)
        h5 = build_gmg(op5, spec, precision="fp64")
        rep5 = run_solver(op5, h5, spec, method="pcg")
        gates.append(_gate(
            f"M5-p{p}", "SIMP sanity probe converges",
            rep5.converged, rep5.iterations, spec.maxiter))

    # M6: kappa_eff bound on the nominal uniform probe
    probe = probe_kappa(op2, spec, h2)
    gates.append(_gate(
        "M6", "kappa_eff of the FP64 V-cycle-preconditioned operator",
        probe.kappa_eff <= 256.0, probe.kappa_eff, 256.0,
        eps_kappa=probe.eps_kappa))

    # M7: BF16 drop-in compliance parity (FGMRES, restart 50, deep cap)
    h16 = build_gmg(op, spec, precision="bf16")
    cfg7 = SolverConfig(method="fgmres", tol=spec.tol, maxiter=2000, restart=50)
    rep64 = fgmres(op.matvec, h64.vcycle, b, cfg7)
    rep16 = fgmres(op.matvec, h16.vcycle, b, cfg7)
    c64, c16 = op.compliance(rep64.x), op.compliance(rep16.x)
    cdiff = abs(c16 - c64) / abs(c64)
    gates.append(_gate(
        "M7", "BF16 drop-in compliance error vs FP64",
        rep16.converged and cdiff <= 0.005, cdiff, 0.005,
        iterations=rep16.iterations))

    # M8: three-level FP32 hierarchy compliance parity
    worst = 0.0
    for dims in ((8, 4, 4), (16, 8, 8)):
        g8, op8 = build_problem(spec, grid=dims, state="uniform", vf=0.5, p=3.0)
        b8 = g8.load[g8.free_dofs]
        h8 = build_gmg(op8, spec, precision="fp32", levels=3)
        h8r = build_gmg(op8, spec, precision="fp64")
        r8 = run_solver(op8, h8, spec, method="pcg")
        r8r = run_solver(op8, h8r, spec, method="pcg")
        if not (r8.converged and r8r.converged):
            worst = math.inf
            break
        worst = max(worst, abs(op8.compliance(r8.x) - op8.compliance(r8r.x))
                    / abs(op8.compliance(r8r.x)))
    gates.append(_gate(
        "M8", "three-level FP32 hierarchy compliance error vs FP64",
        worst <= 0.005, worst, 0.005))

    aggregates = {
        "gates_total": len(gates),
        "gates_passed": sum(1 for x in gates if x["passed"]),
    }
    return _report(spec, [], aggregates, gates)


# ---------------------------------------------------------------------------
# solve

def cmd_solve(spec: ExperimentSpec) -> dict:
    """Warm-ups plus timed trials of one solver configuration."""
    t0 = time.perf_counter()
    g, op = build_problem(spec)
    method = spec.resolved_method()
    h = None if method == "jacobi" else build_gmg(op, spec)
    setup_time = time.perf_counter() - t0

    for _ in range(spec.warmups):
        run_solver(op, h, spec)
    trials = []
    for _ in range(spec.trials):
        rep = run_solver(op, h, spec)
        trials.append(_trial_entry(rep, op))

    it_mean, it_std = _mean_std(t["iterations"] for t in trials)
    wt_mean, wt_std = _mean_std(t["wall_time"] for t in trials)
    aggregates = {
        "method": method,
        "converged_trials": sum(1 for t in trials if t["converged"]),
        "iterations_mean": it_mean,
        "iterations_std": it_std,
        "wall_time_mean": wt_mean,
        "wall_time_std": wt_std,
        "setup_time": setup_time,
    }
    gates = [_gate("solve-converged", "all timed trials converged",
                   aggregates["converged_trials"] == len(trials),
                   aggregates["converged_trials"], len(trials))]
    return _report(spec, trials, aggregates, gates)


# ---------------------------------------------------------------------------
# probe

def cmd_probe(spec: ExperimentSpec) -> dict:
    """Spectral probe of the FP64 V-cycle-preconditioned operator."""
    g, op = build_problem(spec)
    probe = probe_kappa(op, spec)
    trial = {
        "kappa_eff": probe.kappa_eff,
        "eps_kappa": probe.eps_kappa,
        "lambda_min": probe.lambda_min,
        "lambda_max": probe.lambda_max,
        "partial": probe.partial,
        "screen_pass": bf16_screen(probe),
    }
    return _report(spec, [trial], {"kappa_eff": probe.kappa_eff}, [])


# ---------------------------------------------------------------------------
# sweep

def cmd_sweep(spec: ExperimentSpec) -> dict:
    """Cartesian screen over states and solver knobs.

    Each cell reports the Lanczos probe of its FP64 hierarchy plus the
    converged/capped status of the cell's own precision path. Cells run in a
    canonical order (grid, vf, p, smoother, degree, depth, restart,
    precision) regardless of any future parallel execution.
    """
    grids = spec.grids or SWEEP_DEFAULT_GRIDS
    vfs = spec.vfs or SWEEP_DEFAULT_VFS
    ps = spec.ps or SWEEP_DEFAULT_PS
    smoothers = spec.smoothers or (spec.smoother,)
    degrees = spec.degrees or (spec.degree,)
    depths = spec.depths or (spec.levels,)
    restarts = spec.restarts or (spec.restart,)
    precisions = spec.precisions or (spec.precision,)

    cells = []
    for dims, vf, p, smoother, degree, depth, restart, precision in \
            itertools.product(grids, vfs, ps, smoothers, degrees, depths,
                              restarts, precisions):
        g, op = build_problem(spec, grid=dims, vf=vf, p=p)
        h64 = build_gmg(op, spec, precision="fp64", levels=depth,
                        smoother=smoother, degree=degree)
        probe = probe_kappa(op, spec, h64)
        if precision == "fp64":
            h = h64
        else:
            h = build_gmg(op, spec, precision=precision, levels=depth,
                          smoother=smoother, degree=degree)
        method = spec.resolved_method(precision)
        rep = run_solver(op, h, spec, method=method, restart=restart)
        cells.append({
            "grid": list(dims), "vf": vf, "p": p, "smoother": smoother,
            "degree": degree, "levels": h.n_levels, "restart": restart,
            "precision": precision, "method": method,
            "converged": rep.converged, "iterations": rep.iterations,
            "failure_kind": rep.failure_kind,
            "final_true_residual": rep.final_true_residual,
            "kappa_eff": probe.kappa_eff, "eps_kappa": probe.eps_kappa,
            "screen_pass": bf16_screen(probe),
            "wall_time": rep.wall_time,
        })

    by_size: dict[str, dict] = {}
    for c in cells:
        key = "x".join(str(d) for d in c["grid"])
        s = by_size.setdefault(key, {"cells": 0, "failures": 0})
        s["cells"] += 1
        s["failures"] += 0 if c["converged"] else 1
    for s in by_size.values():
        s["failure_rate"] = s["failures"] / s["cells"]
    return _report(spec, cells, {"by_size": by_size, "cells": len(cells)}, [])


# ---------------------------------------------------------------------------
# robustness

def cmd_robustness(spec: ExperimentSpec) -> dict:
    """The ten fixed stress configurations at desk scale.

    FP64 hierarchy, FGMRES with the spec's restart/cap (Table-style values:
    restart 50, 500-iteration cap). Convergence of the three uniform cases
    and the layered band is gated; heterogeneous outcomes are recorded
    without assertion.
    """
    cases = []
    for kind, vf, p, floor, seed in ROBUSTNESS_CASES:
        g, op = build_problem(spec, state=kind, vf=vf, p=p, floor=floor,
                              seed=seed)
        h64 = build_gmg(op, spec, precision="fp64")
        probe = probe_kappa(op, spec, h64)
        rep = run_solver(op, h64, spec, method="fgmres")
        cases.append({
            "configuration": kind, "vf": vf, "p": p, "floor": floor,
            "seed": seed,
            "result": "pass" if rep.converged else "fail",
            "converged": rep.converged,
            "iterations": rep.iterations,
            "failure_kind": rep.failure_kind,
            "final_true_residual": rep.final_true_residual,
            "kappa_eff": probe.kappa_eff,
            "wall_time": rep.wall_time,
        })

    uniform_ok = all(c["converged"] for c in cases if c["configuration"] == "uniform")
    layered_ok = all(c["converged"] for c in cases if c["configuration"] == "layered")
    cap_consistent = all(
        (c["failure_kind"] != "cap" or not c["converged"])
        and (not c["converged"] or c["failure_kind"] == "none")
        for c in cases)
    residual_consistent = all(
        c["converged"] == (c["final_true_residual"] < spec.tol) for c in cases)
    gates = [
        _gate("robustness-uniform", "all three uniform cases converge",
              uniform_ok, sum(1 for c in cases
                              if c["configuration"] == "uniform" and c["converged"]), 3),
        _gate("robustness-layered", "layered band converges", layered_ok,
              int(layered_ok), 1),
        _gate("robustness-cap-consistency",
              "capped cases are never reported converged", cap_consistent,
              int(cap_consistent), 1),
        _gate("robustness-true-residual",
              "converged agrees with the recomputed FP64 true residual",
              residual_consistent, int(residual_consistent), 1),
    ]
    aggregates = {
        "passes": sum(1 for c in cases if c["converged"]),
        "failures": sum(1 for c in cases if not c["converged"]),
    }
    return _report(spec, cases, aggregates, gates)


COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "probe": cmd_probe,
    "robustness": cmd_robustness,
}


def run_experiment(spec: ExperimentSpec) -> dict:
    spec.validate()
    return COMMANDS[spec.experiment](spec)


def exit_code(report: dict) -> int:
    """0 when every gate passed, 1 otherwise (invalid specs exit 2 upstream)."""
    return 0 if all(g["passed"] for g in report.get("gates", [])) else 1
