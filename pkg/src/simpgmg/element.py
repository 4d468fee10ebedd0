"""Unit stiffness of the trilinear hexahedral element.

The element is the unit cube with isotropic unit modulus; the per-element
modulus scales this matrix inside the operators. Local DOF ordering follows
the grid contract: corner a = CORNER_OFFSETS[a], DOF = 3*a + axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import CORNER_OFFSETS


@dataclass(frozen=True)
class ElementStiffness:
    ke: np.ndarray  # (24, 24) symmetric PSD, unit modulus
    nu: float


def unit_element_stiffness(nu: float = 0.3) -> ElementStiffness:
    """24x24 unit-modulus stiffness by 2x2x2 Gauss quadrature on the unit cube.

    Exact for the trilinear element on this affine geometry (the integrand is
    at most quadratic per coordinate). Raises for nu >= 0.5 (incompressible
    limit) or negative nu.
    """
    if not (0.0 <= nu < 0.5):
        raise ValueError(f"Poisson ratio must lie in [0, 0.5), got {nu}")
    lam = nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = 1.0 / (2.0 * (1.0 + nu))
    D = np.zeros((6, 6))
    D[:3, :3] = lam
    D[np.arange(3), np.arange(3)] += 2.0 * mu
    D[3:, 3:] = mu * np.eye(3)

    # corner signs on the reference cube [-1,1]^3
    s = 2.0 * CORNER_OFFSETS - 1.0  # (8, 3)
    g = 1.0 / np.sqrt(3.0)
    ke = np.zeros((24, 24))
    for p in (-g, g):
        for q in (-g, g):
            for r in (-g, g):
                xi = np.array([p, q, r])
                # dN_a/dxi_d on the reference cube, then chain rule to the
                # unit cube: x = (xi+1)/2, so grad_x = 2*grad_xi, detJ = 1/8
                f = 1.0 + s * xi  # (8, 3) one-dimensional factors
                dn = np.empty((8, 3))
                dn[:, 0] = s[:, 0] * f[:, 1] * f[:, 2]
                dn[:, 1] = f[:, 0] * s[:, 1] * f[:, 2]
                dn[:, 2] = f[:, 0] * f[:, 1] * s[:, 2]
                dn *= 2.0 / 8.0
                B = np.zeros((6, 24))
                for a in range(8):
                    c = 3 * a
                    B[0, c + 0] = dn[a, 0]
                    B[1, c + 1] = dn[a, 1]
                    B[2, c + 2] = dn[a, 2]
                    B[3, c + 0] = dn[a, 1]  # gamma_xy
                    B[3, c + 1] = dn[a, 0]
                    B[4, c + 1] = dn[a, 2]  # gamma_yz
                    B[4, c + 2] = dn[a, 1]
                    B[5, c + 0] = dn[a, 2]  # gamma_zx
                    B[5, c + 2] = dn[a, 0]
                ke += (B.T @ D @ B) / 8.0
    ke = 0.5 * (ke + ke.T)
    ke.setflags(write=False)
    return ElementStiffness(ke, nu)
