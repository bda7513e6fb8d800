import numpy as np
import pytest

from framehydro.errors import GridMismatch, NonFiniteField
from framehydro.spectral_grid import FiniteDifferenceBackend, Grid

from helpers import band_limited


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid((8, 8))          # too coarse
    with pytest.raises(ValueError):
        Grid((33, 32))        # odd axis
    with pytest.raises(ValueError):
        Grid((32,))           # 1D
    with pytest.raises(ValueError):
        Grid((32, 32), lengths=(1.0, -1.0))


def test_first_derivative_exact_for_band_limited(grid32):
    X = grid32.mesh()
    f = np.sin(2 * X[0]) * np.cos(5 * X[1])
    g = grid32.gradient(f)
    assert np.max(np.abs(g[0] - 2 * np.cos(2 * X[0]) * np.cos(5 * X[1]))) < 1e-12
    assert np.max(np.abs(g[1] + 5 * np.sin(2 * X[0]) * np.sin(5 * X[1]))) < 1e-12
    assert np.max(np.abs(g[2])) == 0.0


def test_derivatives_of_constant_vanish(grid32):
    c = np.full(grid32.dims, 3.7)
    assert np.max(np.abs(grid32.gradient(c))) == 0.0
    assert np.max(np.abs(grid32.laplacian(c))) < 1e-14


def test_laplacian_power_is_composition(grid32):
    f = band_limited(grid32, (), 7, 1)
    twice = grid32.laplacian(grid32.laplacian(f))
    power = grid32.laplacian_power(f, 2)
    scale = np.max(np.abs(twice))
    assert np.max(np.abs(twice - power)) / scale < 1e-11


def test_operator_consistency(grid32):
    w = band_limited(grid32, (3,), 6, 2)
    G = grid32.gradient(w)
    div = grid32.divergence(w)
    assert np.max(np.abs(div - (G[0, 0] + G[1, 1] + G[2, 2]))) < 1e-12
    gd = grid32.grad_div(w)
    assert np.max(np.abs(gd - grid32.gradient(div))) < 1e-11
    lap = grid32.laplacian(w)
    # curl curl = grad div - laplacian
    cc = grid32.curl(grid32.curl(w))
    assert np.max(np.abs(cc - gd + lap)) < 1e-10


def test_parseval(grid32):
    f = band_limited(grid32, (3,), 9, 3)
    a = grid32.l2_norm_sq(f)
    b = grid32.spectral_norm_sq(f)
    assert abs(a - b) / a < 1e-12


def test_dealias_matches_refined_grid_product(grid32):
    # inputs inside the 2/3 band, product spills past Nyquist
    fine = Grid((64, 64))
    a = band_limited(grid32, (), 10, 4)
    b = band_limited(grid32, (), 10, 5)
    raw = a * b
    af = grid32.refine_to(fine, a)
    bf = grid32.refine_to(fine, b)
    exact = grid32.restrict_from(fine, af * bf)
    # the raw grid product aliases ...
    assert np.max(np.abs(raw - exact)) > 1e-6
    # ... the dealiased one agrees with the refined-grid reference
    lhs = grid32.dealias(raw)
    rhs = grid32.dealias(exact)
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_leray_annihilates_gradients(grid32):
    phi = band_limited(grid32, (), 6, 6)
    g = grid32.gradient(phi)
    assert np.max(np.abs(grid32.leray_project(g))) < 1e-12


def test_leray_fixes_divergence_free(grid32):
    v = grid32.leray_project(band_limited(grid32, (3,), 6, 7))
    assert np.max(np.abs(grid32.leray_project(v) - v)) < 1e-13
    assert grid32.l2_norm(grid32.divergence(v)) < 1e-12


def test_leray_output_orthogonal_to_gradients(grid32):
    u = band_limited(grid32, (3,), 8, 8)
    Pu = grid32.leray_project(u)
    for seed in range(10):
        phi = band_limited(grid32, (), 8, 100 + seed)
        g = grid32.gradient(phi)
        assert abs(np.sum(Pu * g)) * grid32.dV < 1e-12


def test_leray_self_adjoint(grid32):
    rng = np.random.default_rng(9)
    u = rng.standard_normal((3,) + grid32.dims)
    w = rng.standard_normal((3,) + grid32.dims)
    ip1 = float(np.sum(grid32.leray_project(u) * w)) * grid32.dV
    ip2 = float(np.sum(u * grid32.leray_project(w))) * grid32.dV
    assert abs(ip1 - ip2) < 1e-12 * max(abs(ip1), 1.0)


def test_nonfinite_input_raises(grid32):
    f = np.zeros(grid32.dims)
    f[0, 0] = np.nan
    with pytest.raises(NonFiniteField):
        grid32.gradient(f)
    with pytest.raises(NonFiniteField):
        grid32.leray_project(np.full((3,) + grid32.dims, np.inf))


def test_grid_mismatch_raises(grid32):
    with pytest.raises(GridMismatch):
        grid32.check(np.zeros((3, 16, 16)), (3,))
    with pytest.raises(GridMismatch):
        grid32.divergence(np.zeros((3, 16, 16)))


def test_sobolev_norm_reduces_to_l2(grid32):
    f = band_limited(grid32, (), 5, 10)
    assert abs(grid32.sobolev_norm_sq(f, 0) - grid32.l2_norm_sq(f)) \
        < 1e-12 * grid32.l2_norm_sq(f)


def test_fd_backend_fourth_order():
    coarse, fine = Grid((32, 32)), Grid((64, 64))
    X, Xf = coarse.mesh(), fine.mesh()
    f, ff = np.sin(3 * X[0] + X[1]), np.sin(3 * Xf[0] + Xf[1])
    exact = lambda mesh: 3 * np.cos(3 * mesh[0] + mesh[1])
    e1 = np.max(np.abs(FiniteDifferenceBackend(coarse).gradient(f)[0] - exact(X)))
    e2 = np.max(np.abs(FiniteDifferenceBackend(fine).gradient(ff)[0] - exact(Xf)))
    assert 12.0 < e1 / e2 < 20.0   # ~2^4


def test_3d_operators(grid3d):
    X = grid3d.mesh()
    f = np.sin(X[0]) * np.sin(2 * X[1]) * np.cos(X[2])
    assert np.max(np.abs(grid3d.laplacian(f) + 6 * f)) < 1e-12
    v = grid3d.gradient(f)
    assert np.max(np.abs(grid3d.leray_project(v))) < 1e-13
    assert abs(grid3d.spectral_norm_sq(f) - grid3d.l2_norm_sq(f)) \
        < 1e-12 * grid3d.l2_norm_sq(f)
