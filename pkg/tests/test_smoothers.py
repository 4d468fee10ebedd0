import numpy as np
import pytest

from simpgmg import (FineOperator, PrecisionTag, SmootherConfig, SplitMix64,
                     build_cantilever, chebyshev_band_bound, chebyshev_smooth,
                     estimate_lambda_max, jacobi_smooth, make_state,
                     simp_modulus)

ALPHA = 1.0 / 30.0


def _diag_apply(d):
    d = np.asarray(d, dtype=np.float64)
    return lambda x: d.astype(x.dtype) * x


def _residual_poly(lam, lam_max, nu, alpha):
    """Analytic Chebyshev residual polynomial on the target band."""
    sigma = 0.5 * (1 + alpha) * lam_max
    delta = 0.5 * (1 - alpha) * lam_max
    t = (sigma - lam) / delta
    t = np.asarray(t, dtype=np.float64)
    out = np.where(np.abs(t) <= 1.0,
                   np.cos(nu * np.arccos(np.clip(t, -1, 1))),
                   np.cosh(nu * np.arccosh(np.maximum(np.abs(t), 1.0)))
                   * np.sign(t) ** nu)
    return out / np.cosh(nu * np.arccosh((sigma) / delta))


def test_band_bound_values():
    assert chebyshev_band_bound(2, ALPHA) == pytest.approx(0.778, abs=1e-3)
    for alpha in (0.01, ALPHA, 0.2):
        assert chebyshev_band_bound(1, alpha) == pytest.approx(
            (1 - alpha) / (1 + alpha), rel=1e-14)
    assert chebyshev_band_bound(1, ALPHA) == pytest.approx(29.0 / 31.0, rel=1e-12)
    bounds = [chebyshev_band_bound(nu, ALPHA) for nu in range(1, 7)]
    assert all(b1 > b2 for b1, b2 in zip(bounds, bounds[1:]))
    with pytest.raises(ValueError):
        chebyshev_band_bound(0, ALPHA)
    with pytest.raises(ValueError):
        chebyshev_band_bound(2, 1.0)


def test_degree_one_is_damped_jacobi_step():
    lam_max = 3.7
    d = np.array([2.0])
    b = np.array([1.3])
    out = chebyshev_smooth(_diag_apply(d), b, None, 1.0 / d, lam_max, 1, ALPHA)
    a0 = 2.0 / ((1 + ALPHA) * lam_max)
    assert out[0] == pytest.approx(a0 * b[0] / d[0], rel=1e-15)


def test_band_reduction_respects_bound():
    # scalar modes at 100 eigenvalues across the band (D = I so the modes
    # sit at their nominal eigenvalues): the error reduction after one
    # application may not exceed the Chebyshev residual-polynomial bound
    lam_max = 2.3
    lams = np.linspace(ALPHA * lam_max, lam_max, 100)
    x_true = np.ones_like(lams)
    b = lams * x_true
    for nu in (1, 2, 4):
        out = chebyshev_smooth(_diag_apply(lams), b, None, np.ones_like(lams),
                               lam_max, nu, ALPHA)
        reduction = np.abs(out - x_true)  # initial error is one per mode
        assert reduction.max() <= chebyshev_band_bound(nu, ALPHA) + 1e-10


def test_midband_matches_analytic_polynomial():
    lam_max = 1.0
    lam = 0.5 * (ALPHA + 1.0) * lam_max  # exact band midpoint
    b = np.array([lam * 2.0])
    out = chebyshev_smooth(_diag_apply([lam]), b, None, np.ones(1),
                           lam_max, 2, ALPHA)
    err = out[0] - 2.0
    expected = _residual_poly(lam, lam_max, 2, ALPHA) * (-2.0)
    assert err == pytest.approx(expected, abs=1e-12)
    assert abs(err / 2.0) == pytest.approx(chebyshev_band_bound(2, ALPHA),
                                           rel=1e-12)


def test_polynomial_identity_on_diagonal_system():
    # the smoother is a fixed polynomial in D^-1 K: compare against the
    # analytic residual polynomial mode by mode on a 6x6 diagonal system
    lam_max = 4.0
    lams = np.array([0.2, 0.5, 1.1, 2.0, 3.1, 4.0])
    x_true = np.array([1.0, -2.0, 0.5, 3.0, -1.5, 0.25])
    b = lams * x_true
    x0 = np.array([0.5, 0.0, -1.0, 1.0, 2.0, 0.0])
    for nu in (1, 2, 3, 4):
        out = chebyshev_smooth(_diag_apply(lams), b, x0, np.ones(6),
                               lam_max, nu, ALPHA)
        p = _residual_poly(lams, lam_max, nu, ALPHA)
        expected = x_true + p * (x0 - x_true)
        assert np.allclose(out, expected, rtol=0, atol=1e-12)


def test_chebyshev_validation():
    with pytest.raises(ValueError):
        chebyshev_smooth(_diag_apply([1.0]), np.ones(1), None, np.ones(1),
                         0.0, 2, ALPHA)
    with pytest.raises(ValueError):
        chebyshev_smooth(_diag_apply([1.0]), np.ones(1), None, np.ones(1),
                         1.0, 0, ALPHA)


def test_jacobi_pure_diagonal_step():
    d = np.array([4.0, 2.0])
    b = np.array([1.0, 1.0])
    out = jacobi_smooth(_diag_apply(d), b, None, 1.0 / d, 0.5, 1)
    assert np.allclose(out, 0.5 * b / d, rtol=1e-15)


def test_jacobi_modal_convergence():
    # on K = diag(1, 2) with D = diag(K), each mode contracts by 1 - omega
    d = np.array([1.0, 2.0])
    x_true = np.array([3.0, -1.0])
    b = d * x_true
    err0 = -x_true
    for steps in (1, 2, 5):
        out = jacobi_smooth(_diag_apply(d), b, None, 1.0 / d, 0.5, steps)
        expected = x_true + (0.5**steps) * err0
        assert np.allclose(out, expected, rtol=0, atol=1e-14)


def test_jacobi_matches_dense_reference():
    g = build_cantilever(2, 1, 1)
    op = FineOperator(g, simp_modulus(make_state("uniform", 2, 1, 1, vf=0.5)))
    K = op.assemble_dense()
    dinv = 1.0 / op.diagonal()
    b = SplitMix64(3).gaussian(g.n_free)
    x = np.zeros(g.n_free)
    for _ in range(4):
        x = x + 0.5 * dinv * (b - K @ x)
    out = jacobi_smooth(op.matvec, b, None, dinv, 0.5, 4)
    assert np.allclose(out, x, rtol=0, atol=1e-12 * np.abs(x).max())


def test_jacobi_validation():
    with pytest.raises(ValueError):
        jacobi_smooth(_diag_apply([1.0]), np.ones(1), None, np.ones(1), 0.6, 1)
    with pytest.raises(ValueError):
        jacobi_smooth(_diag_apply([1.0]), np.ones(1), None, np.ones(1), 0.0, 1)


def test_smoother_config_validation():
    with pytest.raises(ValueError):
        SmootherConfig(kind="sor")
    with pytest.raises(ValueError):
        SmootherConfig(degree=0)
    with pytest.raises(ValueError):
        SmootherConfig(alpha=1.5)
    with pytest.raises(ValueError):
        SmootherConfig(omega=0.9)


def test_lambda_max_diagonal_cases():
    d = np.array([1.0, 2.0, 4.0])
    est = estimate_lambda_max(_diag_apply(d), np.ones(3), iters=20, seed=0)
    assert est == pytest.approx(4.0, rel=0.01)
    # D = diag(K) makes D^-1 K the identity
    est1 = estimate_lambda_max(_diag_apply(d), 1.0 / d, iters=5, seed=1)
    assert est1 == pytest.approx(1.0, rel=1e-12)


def test_lambda_max_matches_dense_eigensolver():
    g = build_cantilever(2, 1, 1)
    op = FineOperator(g, simp_modulus(make_state("uniform", 2, 1, 1, vf=0.5)))
    K = op.assemble_dense()
    dinv = 1.0 / op.diagonal()
    true_lam = np.linalg.eigvalsh(np.diag(np.sqrt(dinv)) @ K
                                  @ np.diag(np.sqrt(dinv)))[-1]
    est = estimate_lambda_max(op.matvec, dinv, iters=20, seed=0)
    assert est == pytest.approx(true_lam, rel=0.02)
    # re-seeding moves the estimate by less than a percent
    est2 = estimate_lambda_max(op.matvec, dinv, iters=20, seed=99)
    assert est2 == pytest.approx(est, rel=0.01)


def test_lambda_floor():
    zero = lambda x: np.zeros_like(x)
    assert estimate_lambda_max(zero, np.ones(4), iters=3, seed=0) == 1e-6


def test_fp32_smoother_returns_float64_with_fp32_arithmetic():
    d = np.array([1.0, 2.0, 3.0])
    b = np.array([1.0, 1.0, 1.0])
    out = chebyshev_smooth(_diag_apply(d), b, None, 1.0 / d, 3.5, 2,
                           ALPHA, PrecisionTag.FP32)
    assert out.dtype == np.float64
    ref = chebyshev_smooth(_diag_apply(d), b, None, 1.0 / d, 3.5, 2, ALPHA)
    assert np.allclose(out, ref, rtol=1e-5)
    assert not np.array_equal(out, ref)  # rounded in single precision
