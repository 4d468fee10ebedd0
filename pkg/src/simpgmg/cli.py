"""Command-line benchmark driver.

Subcommands: validate, solve, sweep, probe, robustness. Flags override the
optional --config key=value file, which overrides built-in defaults. Exit
codes: 0 all gates/solves succeeded, 1 at least one gate failed, 2 invalid
specification.
"""

from __future__ import annotations

import argparse
import sys

from .bench.reports import dumps_report
from .bench.runner import exit_code, run_experiment
from .bench.specs import make_spec
from .bench.specs import parse_grid


def _csv_floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _csv_ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


def _csv_strs(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _add_common(p: argparse.ArgumentParser, sweep: bool = False) -> None:
    p.add_argument("--config", help="key=value config file")
    if sweep:
        p.add_argument("--grid", action="append", type=parse_grid,
                       metavar="NX,NY,NZ", dest="grids",
                       help="sweep grid; repeat for multiple sizes")
        p.add_argument("--vf", type=_csv_floats, dest="vfs",
                       help="comma-separated volume fractions")
        p.add_argument("--p", type=_csv_floats, dest="ps",
                       help="comma-separated penalization values")
        p.add_argument("--smoother", type=_csv_strs, dest="smoothers",
                       help="comma-separated smoother kinds")
        p.add_argument("--degree", type=_csv_ints, dest="degrees",
                       help="comma-separated smoother degrees")
        p.add_argument("--levels", type=_csv_ints, dest="depths",
                       help="comma-separated hierarchy depths")
        p.add_argument("--restart", type=_csv_ints, dest="restarts",
                       help="comma-separated FGMRES restarts")
        p.add_argument("--precision", type=_csv_strs, dest="precisions",
                       help="comma-separated precision paths")
    else:
        p.add_argument("--grid", type=parse_grid, metavar="NX,NY,NZ")
        p.add_argument("--vf", type=float)
        p.add_argument("--p", type=float, dest="p")
        p.add_argument("--smoother", choices=("chebyshev", "jacobi"))
        p.add_argument("--degree", type=int)
        p.add_argument("--levels", type=int)
        p.add_argument("--restart", type=int)
        p.add_argument("--precision", choices=("fp64", "fp32", "bf16"))
    p.add_argument("--state", choices=("uniform", "binary", "checkerboard",
                                       "layered", "random_floor",
                                       "mixed_near_void"))
    p.add_argument("--floor", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=("pcg", "fgmres", "jacobi"),
                   help="outer solver; jacobi = flat diagonal-PCG baseline; "
                        "default picks pcg (fp64/fp32) or fgmres (bf16)")
    p.add_argument("--alpha", type=float, help="Chebyshev lower band fraction")
    p.add_argument("--tol", type=float)
    p.add_argument("--maxiter", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--warmups", type=int)
    p.add_argument("--out", help="write the structured report to this file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="simpgmg",
        description="Geometric-multigrid benchmark driver for frozen SIMP "
                    "elasticity systems")
    sub = ap.add_subparsers(dest="experiment", required=True)
    _add_common(sub.add_parser(
        "validate", help="run the desk-scale validation gates"))
    _add_common(sub.add_parser(
        "solve", help="warm-ups plus timed trials of one configuration"))
    _add_common(sub.add_parser(
        "sweep", help="cartesian screen over states and solver knobs"),
        sweep=True)
    _add_common(sub.add_parser(
        "probe", help="Lanczos spectral probe of the preconditioned operator"))
    rb = sub.add_parser(
        "robustness", help="the ten fixed stress configurations")
    _add_common(rb)
    rb.set_defaults(restart=50, maxiter=500)
    return ap


def _spec_overrides(args: argparse.Namespace) -> dict:
    skip = {"experiment", "config", "out"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _print_summary(report: dict) -> None:
    spec = report["spec"]
    exp = spec["experiment"]
    for gate in report.get("gates", []):
        status = "pass" if gate["passed"] else "FAIL"
        print(f"[{status}] {gate['id']}: measured={gate['measured']:.6g} "
              f"threshold={gate['threshold']:.6g}  ({gate['description']})")
    if exp == "solve":
        a = report["aggregates"]
        print(f"solve {spec['grid']} state={spec['state']} "
              f"precision={spec['precision']} method={a['method']}: "
              f"converged {a['converged_trials']}/{len(report['trials'])}, "
              f"iterations {a['iterations_mean']:.6g} +- {a['iterations_std']:.3g}, "
              f"wall {a['wall_time_mean']:.3g}s +- {a['wall_time_std']:.2g}s")
    elif exp == "probe":
        t = report["trials"][0]
        print(f"probe {spec['grid']}: kappa_eff={t['kappa_eff']:.6g} "
              f"eps*kappa={t['eps_kappa']:.6g} screen="
              f"{'pass' if t['screen_pass'] else 'fail'}")
    elif exp == "sweep":
        for key, s in report["aggregates"]["by_size"].items():
            print(f"sweep {key}: {s['failures']}/{s['cells']} cells failed "
                  f"(rate {s['failure_rate']:.3g})")
    elif exp == "robustness":
        for c in report["trials"]:
            print(f"{c['configuration']:<16} vf={c['vf']:<4} p={c['p']:<4} "
                  f"{c['result']:<5} iters={c['iterations']:<4} "
                  f"kappa_eff={c['kappa_eff']:.6g}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = make_spec(args.experiment, args.config, **_spec_overrides(args))
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = run_experiment(spec)
    _print_summary(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(dumps_report(report))
        print(f"report written to {args.out}")
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
