import numpy as np
import pytest

from simpgmg import unit_element_stiffness


def test_symmetry_and_psd():
    ke = unit_element_stiffness(0.3).ke
    assert np.abs(ke - ke.T).max() < 1e-12
    w = np.linalg.eigvalsh(ke)
    assert w[0] > -1e-12


def test_rigid_body_translations():
    ke = unit_element_stiffness(0.3).ke
    for axis in range(3):
        t = np.zeros(24)
        t[axis::3] = 1.0
        assert np.abs(ke @ t).max() < 1e-10


def test_nullspace_dimension_is_six():
    ke = unit_element_stiffness(0.3).ke
    w = np.linalg.eigvalsh(ke)
    assert (np.abs(w) < 1e-9 * w[-1]).sum() == 6


def test_entries_match_symbolic_integration_oracle():
    # independent route: exact symbolic integration of the strain-energy
    # integrand over the unit cube (no Gauss points, no reference mapping)
    sympy = pytest.importorskip("sympy")
    sp = sympy
    x, y, z = sp.symbols("x y z")
    nu = sp.Rational(3, 10)
    lam = nu / ((1 + nu) * (1 - 2 * nu))
    mu = sp.Rational(1, 2) / (1 + nu)
    corners = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0),
               (0, 0, 1), (1, 0, 1), (0, 1, 1), (1, 1, 1)]

    def shape(a):
        dx, dy, dz = corners[a]
        return ((x if dx else 1 - x) * (y if dy else 1 - y)
                * (z if dz else 1 - z))

    def bcol(dof):
        a, ax = divmod(dof, 3)
        g = [sp.diff(shape(a), v) for v in (x, y, z)]
        col = [0] * 6
        col[ax] = g[ax]
        if ax == 0:
            col[3], col[5] = g[1], g[2]
        elif ax == 1:
            col[3], col[4] = g[0], g[2]
        else:
            col[4], col[5] = g[1], g[0]
        return sp.Matrix(col)

    D = sp.zeros(6, 6)
    for i in range(3):
        for j in range(3):
            D[i, j] = lam
        D[i, i] += 2 * mu
    for i in range(3, 6):
        D[i, i] = mu

    ke = unit_element_stiffness(0.3).ke
    assert ke[0, 0] == pytest.approx(55.0 / 234.0, rel=1e-14)
    for (i, j) in [(0, 0), (0, 1), (0, 3), (0, 12), (3, 7), (5, 23), (12, 12)]:
        integrand = (bcol(i).T * D * bcol(j))[0, 0]
        exact = sp.integrate(sp.integrate(sp.integrate(
            integrand, (x, 0, 1)), (y, 0, 1)), (z, 0, 1))
        assert ke[i, j] == pytest.approx(float(exact), rel=1e-13, abs=1e-15)


def test_poisson_ratio_validation():
    with pytest.raises(ValueError):
        unit_element_stiffness(0.5)
    with pytest.raises(ValueError):
        unit_element_stiffness(-0.1)
