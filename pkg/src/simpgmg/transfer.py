"""Trilinear transfer operators and Galerkin coarse-operator assembly.

Coarsening is 2:1 per axis. The scalar prolongation interpolates coarse nodes
to fine nodes with tensor-product weights in {1, 1/2}: even fine indices
inject from one parent, odd fine indices split equally between the two
neighbors. The vector transfer is the scalar pattern per displacement axis,
restricted to free DOFs on both sides; restriction is applied as the
transpose and never stored.

Boundary masking is by injection: a coarse DOF is free iff the fine DOF at
node (2i, 2j, 2k) with the same axis is free.

The first coarse operator is assembled element by element from the eight
local prolongation patterns without materializing the fine matrix; deeper
levels use sparse triple products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fine_operator import FineOperator
from .grid import CORNER_OFFSETS, StructuredGrid, element_cells, make_grid


class CoarseningUnavailableError(ValueError):
    """Raised when a grid dimension is odd and cannot be halved."""


def canonical_csr(A: sp.spmatrix) -> sp.csr_matrix:
    """CSR with summed duplicates, no stored zeros, sorted column indices."""
    A = sp.csr_matrix(A)
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    return A


@dataclass(frozen=True)
class TransferPair:
    """Prolongation between one fine grid and its 2:1-coarsened child."""

    P: sp.csr_matrix          # (fine free) x (coarse free)
    fine: StructuredGrid
    coarse: StructuredGrid

    def prolong(self, xc: np.ndarray) -> np.ndarray:
        return self.P @ xc

    def restrict(self, xf: np.ndarray) -> np.ndarray:
        return self.P.T @ xf


def _scalar_weight_entries(n_fine_nodes: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """1D interpolation stencil: (fine index, coarse index, weight) triples."""
    f = np.arange(n_fine_nodes)
    even = f % 2 == 0
    fi = np.concatenate([f[even], f[~even], f[~even]])
    ci = np.concatenate([f[even] // 2, f[~even] // 2, f[~even] // 2 + 1])
    w = np.concatenate([np.ones(even.sum()), np.full((~even).sum(), 0.5),
                        np.full((~even).sum(), 0.5)])
    return fi, ci, w


def build_transfer(fine: StructuredGrid) -> TransferPair:
    """Build the transfer pair for one 2:1 coarsening step of `fine`."""
    if fine.nx % 2 or fine.ny % 2 or fine.nz % 2:
        raise CoarseningUnavailableError(
            f"grid ({fine.nx},{fine.ny},{fine.nz}) has an odd dimension")
    cnx, cny, cnz = fine.nx // 2, fine.ny // 2, fine.nz // 2

    # coarse Dirichlet mask by injection from fine node (2i, 2j, 2k)
    ci, cj, ck = np.meshgrid(np.arange(cnx + 1), np.arange(cny + 1),
                             np.arange(cnz + 1), indexing="ij")
    inj_nodes = fine.node_index(2 * ci.ravel(order="F"), 2 * cj.ravel(order="F"),
                                2 * ck.ravel(order="F"))
    # node order above must be i-fastest: Fortran ravel of an ij-indexed grid
    inj_dofs = (3 * inj_nodes[:, None] + np.arange(3)[None, :]).ravel()
    coarse_mask = fine.dirichlet_mask[inj_dofs]
    coarse = make_grid(cnx, cny, cnz, coarse_mask)

    wx = _scalar_weight_entries(fine.nx + 1)
    wy = _scalar_weight_entries(fine.ny + 1)
    wz = _scalar_weight_entries(fine.nz + 1)
    # tensor product of the three 1D stencils
    fx, cx, vx = wx
    fy, cy, vy = wy
    fz, cz, vz = wz
    nxy = fx.size * fy.size
    ix = np.tile(np.arange(fx.size), fy.size * fz.size)
    iy = np.tile(np.repeat(np.arange(fy.size), fx.size), fz.size)
    iz = np.repeat(np.arange(fz.size), nxy)
    fine_nodes = fine.node_index(fx[ix], fy[iy], fz[iz])
    coarse_nodes = cx[ix] + (cnx + 1) * (cy[iy] + (cny + 1) * cz[iz])
    weights = vx[ix] * vy[iy] * vz[iz]

    rows = (3 * fine_nodes[:, None] + np.arange(3)[None, :]).ravel()
    cols = (3 * coarse_nodes[:, None] + np.arange(3)[None, :]).ravel()
    vals = np.repeat(weights, 3)
    keep = (fine.free_map[rows] >= 0) & (coarse.free_map[cols] >= 0)
    P = sp.coo_matrix(
        (vals[keep], (fine.free_map[rows[keep]], coarse.free_map[cols[keep]])),
        shape=(fine.n_free, coarse.n_free))
    return TransferPair(canonical_csr(P), fine, coarse)


def local_prolongation_patterns() -> np.ndarray:
    """(8, 24, 24) prolongation from a coarse element onto its 8 fine children.

    Child c sits at offset CORNER_OFFSETS[c] inside the 2x2x2 block of fine
    elements; entry [c, 3a+ax, 3b+ax] interpolates fine corner a of that
    child from coarse corner b.
    """
    pats = np.zeros((8, 24, 24))
    for c, off in enumerate(CORNER_OFFSETS):
        for a, da in enumerate(CORNER_OFFSETS):
            t = (off + da) / 2.0  # coarse-element-local coordinate in [0,1]^3
            for b, db in enumerate(CORNER_OFFSETS):
                w = np.prod(np.where(db == 1, t, 1.0 - t))
                if w != 0.0:
                    for ax in range(3):
                        pats[c, 3 * a + ax, 3 * b + ax] = w
    return pats


def assemble_level1(op: FineOperator, t: TransferPair) -> sp.csr_matrix:
    """Galerkin coarse operator P^T K P assembled element by element.

    Never touches a global fine matrix: each fine element contributes
    E_e * P_e^T Ke P_e through its parent coarse element, with pattern rows
    belonging to fixed fine DOFs zeroed so the product equals the free-DOF
    triple product exactly.
    """
    fine, coarse = t.fine, t.coarse
    if (op.grid.nx, op.grid.ny, op.grid.nz) != (fine.nx, fine.ny, fine.nz):
        raise ValueError("transfer pair was built for a different grid")
    pats = local_prolongation_patterns()
    ke = op.ke
    E = np.asarray(op.modulus.E, dtype=np.float64)
    triples = np.array([p.T @ ke @ p for p in pats])  # (8, 24, 24)

    ei, ej, ek = element_cells(fine.nx, fine.ny, fine.nz)
    pat_idx = (ei % 2) + 2 * (ej % 2) + 4 * (ek % 2)
    # CORNER_OFFSETS[c] encodes (c & 1, (c >> 1) & 1, (c >> 2) & 1), so the
    # child offset code above indexes the pattern table directly
    parent = (ei // 2) + coarse.nx * ((ej // 2) + coarse.ny * (ek // 2))

    contrib = np.zeros((coarse.n_elem, 24, 24))
    for c in range(8):
        sel = pat_idx == c
        if sel.any():
            # each coarse element has exactly one child at position c
            contrib[parent[sel]] += E[sel, None, None] * triples[c]

    # fine elements touching fixed DOFs need their pattern rows masked
    fixed_any = fine.dirichlet_mask[fine.element_dofs].any(axis=1)
    for e in np.flatnonzero(fixed_any):
        p = pats[pat_idx[e]].copy()
        p[fine.dirichlet_mask[fine.element_dofs[e]]] = 0.0
        masked = p.T @ ke @ p
        contrib[parent[e]] += E[e] * (masked - triples[pat_idx[e]])

    cdofs = coarse.element_dofs  # (n_coarse_elem, 24)
    rows = np.repeat(cdofs, 24, axis=1).ravel()
    cols = np.tile(cdofs, (1, 24)).ravel()
    vals = contrib.ravel()
    keep = (coarse.free_map[rows] >= 0) & (coarse.free_map[cols] >= 0)
    K1 = sp.coo_matrix(
        (vals[keep], (coarse.free_map[rows[keep]], coarse.free_map[cols[keep]])),
        shape=(coarse.n_free, coarse.n_free))
    return canonical_csr(K1)


def triple_product(P: sp.spmatrix, K: sp.spmatrix) -> sp.csr_matrix:
    """Exact P^T K P in canonical CSR form."""
    if K.shape[0] != K.shape[1] or K.shape[1] != P.shape[0]:
        raise ValueError(f"dimension mismatch: K {K.shape}, P {P.shape}")
    return canonical_csr(P.T @ (K @ P))
