"""Shared field builders and independent oracles for the test suite."""

import numpy as np

from framehydro.frame_algebra import exp_update_field, identity_field
from framehydro.spectral_grid import Grid


def band_limited(grid, comp_shape, band, seed_or_rng, amplitude=1.0):
    """Mean-free random field, integer modes <= band per axis, max-normalized."""
    rng = (seed_or_rng if isinstance(seed_or_rng, np.random.Generator)
           else np.random.default_rng(seed_or_rng))
    white = rng.standard_normal(tuple(comp_shape) + grid.dims)
    hat = grid.fft(white)
    mask = np.ones(grid._hat_dims, dtype=bool)
    for a in range(grid.ndim):
        mask &= np.abs(grid._kint[a]) <= band
    out = grid.ifft(hat * mask)
    out -= out.mean(axis=tuple(range(-grid.ndim, 0)), keepdims=True)
    return amplitude * out / np.max(np.abs(out))


def random_frame_field(grid, band, amplitude, seed):
    """Exactly orthonormal frame field: exp map of a random angle field."""
    ang = band_limited(grid, (3,), band, seed, amplitude)
    return exp_update_field(identity_field(grid.dims), ang)


def random_divfree(grid, band, amplitude, seed):
    v = grid.leray_project(band_limited(grid, (3,), band, seed))
    return amplitude * v / np.max(np.abs(v))


def tangent_perturbation(grid, F, band, seed, amplitude=1.0):
    """delta F = sum_k c_k(x) V_k(x): an arbitrary tangent direction field."""
    c = band_limited(grid, (3,), band, seed, amplitude)
    dF = np.zeros_like(F)
    dF[1] += c[0] * F[2]; dF[2] -= c[0] * F[1]
    dF[0] -= c[1] * F[2]; dF[2] += c[1] * F[0]
    dF[0] += c[2] * F[1]; dF[1] -= c[2] * F[0]
    return dF


def skew(w):
    return np.array([[0.0, -w[2], w[1]],
                     [w[2], 0.0, -w[0]],
                     [-w[1], w[0], 0.0]])


def newton_polar(M, iters=60):
    """Higham's iteration for the polar factor (independent of SVD)."""
    X = np.array(M, dtype=float)
    for _ in range(iters):
        Xn = 0.5 * (X + np.linalg.inv(X).T)
        if np.max(np.abs(Xn - X)) < 1e-16:
            X = Xn
            break
        X = Xn
    return X


def random_rotation(rng):
    Q, R = np.linalg.qr(rng.standard_normal((3, 3)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 2] = -Q[:, 2]
    return Q


def twist_frame_field(grid, kx=1):
    """Frame twisted about the third axis by theta(x) = sin(kx * 2 pi x / Lx)."""
    X = grid.mesh()
    theta = np.sin(kx * 2 * np.pi * X[0] / grid.lengths[0])
    c, s = np.cos(theta), np.sin(theta)
    F = np.zeros((3, 3) + grid.dims)
    F[0, 0], F[0, 1] = c, s
    F[1, 0], F[1, 1] = -s, c
    F[2, 2] = 1.0
    return F, theta


def analytic_frame_field(grid, amplitude, band, seed):
    """Frame from a trig-polynomial angle field with grid-independent
    coefficients: evaluating on two grids samples the same smooth function
    (unlike the FFT-based builders, whose normalization is grid-dependent)."""
    rng = np.random.default_rng(seed)
    X = grid.mesh()
    th = np.zeros((3,) + grid.dims)
    count = 0
    for comp in range(3):
        for kx in range(-band, band + 1):
            for ky in range(0, band + 1):
                if kx == 0 and ky == 0:
                    continue
                a, b = rng.standard_normal(2)
                ph = (kx * X[0] * 2 * np.pi / grid.lengths[0]
                      + ky * X[1] * 2 * np.pi / grid.lengths[1])
                th[comp] += a * np.cos(ph) + b * np.sin(ph)
                count += 1
    th *= amplitude / np.sqrt(count / 3)
    return exp_update_field(identity_field(grid.dims), th)


def rotate_lattice_z(grid, arr, vector_axes=()):
    """Quarter-turn about the z axis applied to fields on a square 2D grid.

    The domain indices rotate as (ix, iy) -> value from (iy, -ix); any axes
    listed in ``vector_axes`` are treated as spatial 3-vector components and
    mixed as (vx, vy, vz) -> (-vy, vx, vz).
    """
    assert grid.ndim == 2 and grid.dims[0] == grid.dims[1]
    out = np.take(np.swapaxes(arr, -2, -1), -np.arange(grid.dims[0]), axis=-2)
    for ax in vector_axes:
        sl = [slice(None)] * out.ndim
        comps = []
        for c in range(3):
            sl[ax] = c
            comps.append(out[tuple(sl)].copy())
        sl[ax] = 0
        out[tuple(sl)] = -comps[1]
        sl[ax] = 1
        out[tuple(sl)] = comps[0]
    return out
