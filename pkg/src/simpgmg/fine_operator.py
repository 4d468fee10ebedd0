"""Matrix-free fine-level elasticity operator.

The finest stiffness matrix is never assembled: a matvec gathers the 24 local
values of each element (fixed DOFs read as zero), applies the modulus-scaled
unit element stiffness, and scatter-adds the result back into the free DOFs.
Accumulation order is fixed (ascending element index), so FP64 results are
bit-reproducible run to run.

Reduced-precision tags change the arithmetic inside the element kernel only:
under FP32 the gather/multiply/scatter all run in single precision; under
BF16 emulation the gathered values and the element stiffness entries are
rounded to BF16 before the local multiply, and accumulation stays FP32.
"""

from __future__ import annotations

import numpy as np

from .element import unit_element_stiffness
from .grid import StructuredGrid
from .precision import PrecisionTag, round_bf16
from .states import ModulusField

#: Relative floor applied to the assembled diagonal (times its mean entry).
DIAGONAL_FLOOR = 1e-14

#: Free-DOF guard for the dense assembly oracle.
DENSE_GUARD = 20_000


class FineOperator:
    """K_ff action for one frozen modulus field on one grid."""

    def __init__(self, grid: StructuredGrid, modulus: ModulusField,
                 nu: float = 0.3, precision: PrecisionTag = PrecisionTag.FP64):
        if modulus.E.shape != (grid.n_elem,):
            raise ValueError(f"modulus field must have {grid.n_elem} entries")
        self.grid = grid
        self.modulus = modulus
        self.precision = precision
        self.ke = unit_element_stiffness(nu).ke
        self._ke32 = self.ke.astype(np.float32)
        self._ke_bf16 = round_bf16(self._ke32)
        self._E = np.asarray(modulus.E, dtype=np.float64)
        self._E32 = self._E.astype(np.float32)
        self._edofs = grid.element_dofs
        self._flat_edofs = self._edofs.ravel()

    @property
    def n_free(self) -> int:
        return self.grid.n_free

    def matvec(self, u_free: np.ndarray) -> np.ndarray:
        return self.matvec_tagged(u_free, self.precision)

    def matvec_tagged(self, u_free: np.ndarray, tag: PrecisionTag) -> np.ndarray:
        """K_ff @ u_free under the given precision tag."""
        grid = self.grid
        if u_free.shape != (grid.n_free,):
            raise ValueError(f"expected free vector of length {grid.n_free}")
        if tag is PrecisionTag.FP64:
            u_full = np.zeros(grid.n_dof)
            u_full[grid.free_dofs] = u_free
            local = (u_full[self._edofs] @ self.ke) * self._E[:, None]
            out = np.bincount(self._flat_edofs, weights=local.ravel(),
                              minlength=grid.n_dof)
            return out[grid.free_dofs]
        u_full = np.zeros(grid.n_dof, dtype=np.float32)
        u_full[grid.free_dofs] = u_free
        gathered = u_full[self._edofs]
        if tag is PrecisionTag.BF16EMU:
            local = (round_bf16(gathered) @ self._ke_bf16) * self._E32[:, None]
        else:
            local = (gathered @ self._ke32) * self._E32[:, None]
        out = np.zeros(grid.n_dof, dtype=np.float32)
        np.add.at(out, self._flat_edofs, local.ravel())
        return out[grid.free_dofs]

    def diagonal(self) -> np.ndarray:
        """diag(K_ff), floored at DIAGONAL_FLOOR times its mean entry."""
        grid = self.grid
        contrib = self._E[:, None] * np.diag(self.ke)[None, :]
        full = np.bincount(self._flat_edofs, weights=contrib.ravel(),
                           minlength=grid.n_dof)
        d = full[grid.free_dofs]
        return np.maximum(d, DIAGONAL_FLOOR * d.mean())

    def assemble_dense(self) -> np.ndarray:
        """Explicit K_ff for oracle checks; guarded against large grids."""
        grid = self.grid
        if grid.n_free > DENSE_GUARD:
            raise ValueError(f"dense assembly limited to {DENSE_GUARD} free DOFs, "
                             f"grid has {grid.n_free}")
        K = np.zeros((grid.n_free, grid.n_free))
        fmap = grid.free_map
        for e in range(grid.n_elem):
            idx = fmap[self._edofs[e]]
            keep = idx >= 0
            rows = idx[keep]
            K[np.ix_(rows, rows)] += self._E[e] * self.ke[np.ix_(keep, keep)]
        return K

    def compliance(self, u_free: np.ndarray) -> float:
        """Load-weighted displacement f^T u of a solved state."""
        return float(self.grid.load[self.grid.free_dofs] @ u_free)
