"""Structured hexahedral grids, DOF numbering, and the cantilever fixture.

Node numbering contract (transfer operators depend on it): node(i, j, k) =
i + (nx+1)*(j + (ny+1)*k), i.e. i fastest, then j, then k. A node carries
three displacement DOFs numbered dof = 3*node + axis with axis in {0:x, 1:y,
2:z}. Elements are numbered the same way over (nx, ny, nz), and the 8 local
corners of an element follow the identical i-fastest order of their (di, dj,
dk) offsets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: Local corner offsets (di, dj, dk) in the contract order, i fastest.
CORNER_OFFSETS = np.array(
    [(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0),
     (0, 0, 1), (1, 0, 1), (0, 1, 1), (1, 1, 1)],
    dtype=np.int64,
)


@dataclass(frozen=True)
class StructuredGrid:
    """Hexahedral grid with a Dirichlet mask and a nodal load vector."""

    nx: int
    ny: int
    nz: int
    dirichlet_mask: np.ndarray  # bool, (n_dof,), True = fixed
    load: np.ndarray            # float64, (n_dof,), zero on fixed DOFs
    free_dofs: np.ndarray = field(repr=False)    # global indices of free DOFs
    free_map: np.ndarray = field(repr=False)     # dense free index or -1
    element_dofs: np.ndarray = field(repr=False)  # (n_elem, 24) global DOFs

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1) * (self.nz + 1)

    @property
    def n_dof(self) -> int:
        return 3 * self.n_nodes

    @property
    def n_elem(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def n_free(self) -> int:
        return int(self.free_dofs.size)

    def node_index(self, i, j, k):
        return i + (self.nx + 1) * (j + (self.ny + 1) * k)


def element_cells(nx: int, ny: int, nz: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(ei, ej, ek) arrays for all elements in index order (i fastest)."""
    e = np.arange(nx * ny * nz)
    return e % nx, (e // nx) % ny, e // (nx * ny)


def _element_dof_table(nx: int, ny: int, nz: int) -> np.ndarray:
    """(n_elem, 24) global DOF indices per element, contract ordering."""
    ei, ej, ek = element_cells(nx, ny, nz)
    corners = CORNER_OFFSETS
    ni = ei[:, None] + corners[None, :, 0]
    nj = ej[:, None] + corners[None, :, 1]
    nk = ek[:, None] + corners[None, :, 2]
    nodes = ni + (nx + 1) * (nj + (ny + 1) * nk)  # (n_elem, 8)
    dofs = (3 * nodes)[:, :, None] + np.arange(3)[None, None, :]
    return dofs.reshape(-1, 24)


def make_grid(nx: int, ny: int, nz: int, dirichlet_mask: np.ndarray,
              load: np.ndarray | None = None) -> StructuredGrid:
    """Assemble a StructuredGrid from an explicit mask (and optional load)."""
    if nx < 1 or ny < 1 or nz < 1:
        raise ValueError(f"element counts must be positive, got ({nx},{ny},{nz})")
    n_dof = 3 * (nx + 1) * (ny + 1) * (nz + 1)
    mask = np.asarray(dirichlet_mask, dtype=bool)
    if mask.shape != (n_dof,):
        raise ValueError(f"dirichlet mask must have shape ({n_dof},)")
    if load is None:
        load = np.zeros(n_dof)
    else:
        load = np.asarray(load, dtype=np.float64)
        if load.shape != (n_dof,):
            raise ValueError(f"load must have shape ({n_dof},)")
        if np.any(load[mask] != 0.0):
            raise ValueError("load entries on fixed DOFs must be zero")
    free_dofs = np.flatnonzero(~mask)
    free_map = np.full(n_dof, -1, dtype=np.int64)
    free_map[free_dofs] = np.arange(free_dofs.size)
    mask.setflags(write=False)
    load.setflags(write=False)
    return StructuredGrid(nx, ny, nz, mask, load, free_dofs, free_map,
                          _element_dof_table(nx, ny, nz))


def build_cantilever(nx: int, ny: int, nz: int) -> StructuredGrid:
    """Cantilever fixture: clamped x=0 face, unit downward edge load.

    All three DOFs of every node on the x=0 face are fixed. A total load of
    -1 in y is spread uniformly over the nz+1 nodes of the free-end edge at
    x=nx, y=0 (one entry of -1/(nz+1) per node). This load pattern is a fixed
    convention of this package so iteration counts are reproducible.
    """
    if nx < 1 or ny < 1 or nz < 1:
        raise ValueError(f"element counts must be positive, got ({nx},{ny},{nz})")
    nnx, nny, nnz = nx + 1, ny + 1, nz + 1
    n_nodes = nnx * nny * nnz
    mask = np.zeros(3 * n_nodes, dtype=bool)
    ii = np.arange(n_nodes) % nnx
    fixed_nodes = np.flatnonzero(ii == 0)
    mask[(3 * fixed_nodes[:, None] + np.arange(3)[None, :]).ravel()] = True

    load = np.zeros(3 * n_nodes)
    kk = np.arange(nnz)
    edge_nodes = nx + nnx * (0 + nny * kk)  # i=nx, j=0, all k
    load[3 * edge_nodes + 1] = -1.0 / edge_nodes.size
    return make_grid(nx, ny, nz, mask, load)
