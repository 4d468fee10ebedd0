"""Benchmark density-field constructors and the SIMP modulus map.

States are prescribed directly (no filtering or projection): each constructor
returns a per-element physical density in [0, 1] that a subsequent
``simp_modulus`` call turns into the frozen modulus field of one linear solve.
All stochastic constructors draw from the package splitmix64 stream in
element-index order (i fastest), so a (kind, params, seed) triple identifies
one field bit-for-bit on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import element_cells
from .prng import SplitMix64

STATE_KINDS = ("uniform", "binary", "checkerboard", "layered",
               "random_floor", "mixed_near_void")

#: Fraction of solid voxels demoted to the floor in mixed_near_void fields.
MIXED_DEMOTION_FRACTION = 0.1


@dataclass(frozen=True)
class DensityField:
    rho: np.ndarray  # per-element density in [0, 1]
    label: str       # construction descriptor: kind + parameters + seed


@dataclass(frozen=True)
class ModulusField:
    """Per-element frozen modulus defining one linear system."""

    E: np.ndarray
    e0: float
    emin: float
    p: float


def simp_modulus(rho: DensityField, p: float = 3.0, emin: float = 1e-9,
                 e0: float = 1.0) -> ModulusField:
    """Modulus interpolation E_e = emin + (e0 - emin) * rho_e**p."""
    if p <= 0:
        raise ValueError(f"penalization must be positive, got p={p}")
    if not (0.0 < emin < e0):
        raise ValueError(f"need 0 < emin < e0, got emin={emin}, e0={e0}")
    r = np.asarray(rho.rho, dtype=np.float64)
    if np.any(r < 0.0) or np.any(r > 1.0):
        raise ValueError("density values must lie in [0, 1]")
    E = emin + (e0 - emin) * r**p
    E.setflags(write=False)
    return ModulusField(E, e0, emin, p)


def make_state(kind: str, nx: int, ny: int, nz: int, *, vf: float = 0.5,
               floor: float = 1e-2, seed: int = 0) -> DensityField:
    """Construct a benchmark density field.

    kind:
      uniform         rho = vf everywhere
      binary          voxel solid (rho=1) with probability vf, else floor
      checkerboard    solid where (i+j+k) is even, floor otherwise
      layered         solid for element y-index below ny/2, floor otherwise
      random_floor    independent uniform draws on [floor, 1]
      mixed_near_void binary at vf, then a seeded 10% of the solid voxels
                      demoted to floor

    vf is the volume fraction (must lie in (0, 1) where used); floor is the
    synthetic construction floor, distinct from the SIMP modulus floor.
    """
    if kind not in STATE_KINDS:
        raise ValueError(f"unknown state kind {kind!r}; expected one of {STATE_KINDS}")
    n = nx * ny * nz
    if n < 1:
        raise ValueError("grid must have at least one element")
    if kind in ("uniform", "binary", "mixed_near_void") and not (0.0 < vf < 1.0):
        raise ValueError(f"volume fraction must lie in (0, 1), got {vf}")

    if kind == "uniform":
        rho = np.full(n, float(vf))
        label = f"uniform(vf={vf})"
    elif kind == "binary":
        solid = SplitMix64(seed).bernoulli(n, vf)
        rho = np.where(solid, 1.0, floor)
        label = f"binary(vf={vf},floor={floor},seed={seed})"
    elif kind == "checkerboard":
        ei, ej, ek = element_cells(nx, ny, nz)
        rho = np.where((ei + ej + ek) % 2 == 0, 1.0, floor)
        label = f"checkerboard(floor={floor})"
    elif kind == "layered":
        _, ej, _ = element_cells(nx, ny, nz)
        rho = np.where(2 * ej < ny, 1.0, floor)
        label = f"layered(floor={floor})"
    elif kind == "random_floor":
        rho = SplitMix64(seed).uniform(n, floor, 1.0)
        label = f"random_floor(floor={floor},seed={seed})"
    else:  # mixed_near_void
        gen = SplitMix64(seed)
        solid = gen.bernoulli(n, vf)
        # demotion draws are taken for every voxel so the demoted subset
        # depends only on the seed, then applied to solid voxels
        demote = gen.bernoulli(n, MIXED_DEMOTION_FRACTION)
        rho = np.where(solid & ~demote, 1.0, floor)
        label = f"mixed_near_void(vf={vf},floor={floor},seed={seed})"

    rho = np.asarray(rho, dtype=np.float64)
    rho.setflags(write=False)
    return DensityField(rho, label)
