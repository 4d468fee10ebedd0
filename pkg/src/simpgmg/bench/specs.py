"""Experiment specifications and the key=value config format.

Every run default that shapes the numerics is a named field here, so a
config file plus command-line overrides fully determine a report. Config
files hold one ``key = value`` pair per line, ``#`` comments allowed; list
values are comma-separated, grids are NX,NY,NZ triples and multiple grids
are separated by semicolons.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

EXPERIMENTS = ("validate", "solve", "sweep", "probe", "robustness")
PRECISIONS = ("fp64", "fp32", "bf16")
METHODS = ("pcg", "fgmres", "jacobi")  # jacobi = flat diagonal-PCG baseline
STATE_KINDS = ("uniform", "binary", "checkerboard", "layered",
               "random_floor", "mixed_near_void")

#: Robustness screen: (kind, vf, p, floor, seed); seeds follow the fixed
#: convention binary 7/11/13, random floor 17, mixed near-void 19;
#: checkerboard and layered are deterministic constructions.
ROBUSTNESS_CASES = (
    ("uniform", 0.2, 3.0, 1e-2, 0),
    ("uniform", 0.5, 3.0, 1e-2, 0),
    ("uniform", 0.8, 3.0, 1e-2, 0),
    ("binary", 0.2, 1.5, 1e-2, 7),
    ("binary", 0.5, 3.0, 1e-2, 11),
    ("binary", 0.8, 4.5, 1e-2, 13),
    ("checkerboard", 0.5, 3.0, 1e-2, 0),
    ("layered", 0.5, 3.0, 1e-2, 0),
    ("random_floor", 0.5, 3.0, 1e-12, 17),
    ("mixed_near_void", 0.5, 3.0, 1e-2, 19),
)


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str = "solve"
    # problem
    grid: tuple[int, int, int] = (16, 8, 8)
    state: str = "uniform"
    vf: float = 0.5
    p: float = 3.0
    floor: float = 1e-2
    seed: int = 42
    e0: float = 1.0
    emin: float = 1e-9
    poisson: float = 0.3
    # hierarchy
    precision: str = "fp32"
    levels: int = 4
    smoother: str = "chebyshev"
    degree: int = 2
    alpha: float = 1.0 / 30.0
    omega: float = 0.5
    coarse_smooth_steps: int = 2
    cholesky_cutoff: int = 5000
    coarse_pcg_steps: int = 80
    power_seed: int = 0
    # outer solver; method None selects pcg for fp64/fp32 and fgmres for bf16
    method: str | None = None
    restart: int = 32
    tol: float = 1e-6
    maxiter: int = 200
    # probe
    lanczos_steps: int = 40
    lanczos_seed: int = 0
    # measurement protocol
    trials: int = 10
    warmups: int = 2
    # sweep axes; None means "the scalar field above, as a one-point axis"
    grids: tuple[tuple[int, int, int], ...] | None = None
    vfs: tuple[float, ...] | None = None
    ps: tuple[float, ...] | None = None
    smoothers: tuple[str, ...] | None = None
    degrees: tuple[int, ...] | None = None
    depths: tuple[int, ...] | None = None
    restarts: tuple[int, ...] | None = None
    precisions: tuple[str, ...] | None = None

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if len(self.grid) != 3 or any(int(d) < 1 for d in self.grid):
            raise ValueError(f"grid must be three positive counts, got {self.grid}")
        if self.state not in STATE_KINDS:
            raise ValueError(f"unknown state kind {self.state!r}")
        if self.precision not in PRECISIONS:
            raise ValueError(f"unknown precision {self.precision!r}")
        if self.method is not None and self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.smoother not in ("chebyshev", "jacobi"):
            raise ValueError(f"unknown smoother {self.smoother!r}")
        if self.tol <= 0 or self.maxiter < 1 or self.restart < 1:
            raise ValueError("tol must be positive and iteration counts >= 1")
        if self.levels < 1 or self.degree < 1:
            raise ValueError("levels and degree must be at least 1")
        if self.trials < 1 or self.warmups < 0:
            raise ValueError("need trials >= 1 and warmups >= 0")
        for name in ("grids",):
            axis = getattr(self, name)
            if axis is not None:
                for g in axis:
                    if len(g) != 3 or any(int(d) < 1 for d in g):
                        raise ValueError(f"bad grid in {name}: {g}")
        for name in ("precisions",):
            axis = getattr(self, name)
            if axis is not None and any(p not in PRECISIONS for p in axis):
                raise ValueError(f"bad precision axis {axis}")
        for name in ("smoothers",):
            axis = getattr(self, name)
            if axis is not None and any(s not in ("chebyshev", "jacobi") for s in axis):
                raise ValueError(f"bad smoother axis {axis}")

    def resolved_method(self, precision: str | None = None) -> str:
        """Outer-solver policy: pcg for fp64/fp32 paths, fgmres for bf16."""
        if self.method is not None:
            return self.method
        prec = precision if precision is not None else self.precision
        return "fgmres" if prec == "bf16" else "pcg"

    def to_dict(self) -> dict:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = [list(g) if isinstance(g, tuple) else g for g in v]
            d[f.name] = v
        return d


def parse_grid(text: str) -> tuple[int, int, int]:
    parts = [int(p) for p in text.replace("x", ",").split(",") if p.strip()]
    if len(parts) != 3:
        raise ValueError(f"grid must be NX,NY,NZ, got {text!r}")
    return tuple(parts)


def _coerce(name: str, text: str):
    """Coerce a config-file value to the spec field's type."""
    text = text.strip()
    if name == "grid":
        return parse_grid(text)
    if name == "grids":
        return tuple(parse_grid(t) for t in text.split(";") if t.strip())
    if name == "method":
        return None if text.lower() in ("none", "auto", "") else text
    kind = {f.name: f.type for f in fields(ExperimentSpec)}.get(name)
    if kind is None:
        raise ValueError(f"unknown config key {name!r}")
    if name in ("vfs", "ps"):
        return tuple(float(t) for t in text.split(",") if t.strip())
    if name in ("degrees", "depths", "restarts"):
        return tuple(int(t) for t in text.split(",") if t.strip())
    if name in ("smoothers", "precisions"):
        return tuple(t.strip() for t in text.split(",") if t.strip())
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    return text


def load_config(path: str) -> dict:
    """Parse a key=value config file into ExperimentSpec field overrides."""
    overrides: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            overrides[key.strip()] = _coerce(key.strip(), value)
    return overrides


def make_spec(experiment: str, config_path: str | None = None, **overrides) -> ExperimentSpec:
    """Spec from defaults, then config file, then explicit overrides."""
    merged: dict = {"experiment": experiment}
    if config_path:
        merged.update(load_config(config_path))
    merged.update({k: v for k, v in overrides.items() if v is not None})
    spec = replace(ExperimentSpec(), **merged)
    spec.validate()
    return spec
