"""Structured run reports with round-trip floating-point serialization.

Reports are JSON-compatible trees {spec, trials, aggregates, gates,
environment}. Floats are written with 17 significant digits so every value
round-trips exactly; rerunning an identical spec therefore produces a
byte-identical document except for wall-clock fields, and
``numeric_payload`` strips exactly those for determinism comparisons.
"""

from __future__ import annotations

import json
import math
import os
import platform
import sys

import numpy as np

#: Keys excluded from the deterministic numeric payload (timings and the
#: machine stamp; everything else must reproduce bit-for-bit).
TIMING_KEYS = frozenset({
    "wall_time", "setup_time", "wall_time_mean", "wall_time_std",
    "setup_time_mean", "setup_time_std", "environment",
})


def _sanitize(obj):
    """Recursively convert numpy containers/scalars to plain Python."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write(obj, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        if math.isnan(obj):
            out.append("NaN")
        elif math.isinf(obj):
            out.append("Infinity" if obj > 0 else "-Infinity")
        else:
            out.append(format(obj, ".17g"))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(k), ensure_ascii=False))
            out.append(": ")
            _write(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(", ")
            _write(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


def dumps_report(tree: dict) -> str:
    """Deterministic JSON text of a report tree (17-digit floats)."""
    out: list[str] = []
    _write(_sanitize(tree), out)
    return "".join(out) + "\n"


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, (list, tuple)):
        return [_strip_timing(v) for v in obj]
    return obj


def numeric_payload(tree: dict) -> str:
    """Serialized report with wall-clock fields and machine stamp removed.

    Two runs of the same spec, seed, and worker count must agree on this
    string byte for byte.
    """
    return dumps_report(_strip_timing(_sanitize(tree)))


def worker_count() -> int:
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        if os.environ.get(var, "").isdigit():
            return int(os.environ[var])
    return os.cpu_count() or 1


def environment_stamp() -> dict:
    from .. import __version__
    import scipy
    return {
        "package_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": sys.platform,
        "worker_count": worker_count(),
    }
