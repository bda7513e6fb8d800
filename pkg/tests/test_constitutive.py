import numpy as np
import pytest

import framehydro.constitutive as con
import framehydro.elastic_energy as el
import framehydro.frame_algebra as fa
from framehydro.errors import GridMismatch

from helpers import band_limited, random_divfree, random_frame_field, random_rotation


# -- coefficient validation ----------------------------------------------------

def test_validate_boundary_case_ok():
    p = con.ViscousParams(np.array([0.0, 1, 1, 1, 1, 1.0]), np.ones(3),
                          np.ones(3), 1.0)
    assert p.validate() == []


def test_validate_cross_coefficient_violation():
    p = con.ViscousParams(np.array([2.0, 1, 1, 1, 1, 1.0]), np.ones(3),
                          np.ones(3), 1.0)
    assert p.validate() == ["beta0^2 <= beta1*beta2"]


def test_validate_alignment_violation():
    p = con.ViscousParams(np.array([0.0, 1, 1, 1, 1, 1.0]), np.ones(3),
                          np.array([2.0, 1.0, 1.0]), 1.0)
    assert p.validate() == ["eta1^2 <= beta5*chi1"]


def test_validate_collects_all_violations():
    p = con.ViscousParams(np.array([2.0, 1, 1, -1, 1, 1.0]), np.array([1, 1, -1.0]),
                          np.array([2.0, 1.0, 9.0]), -1.0)
    bad = p.validate()
    assert len(bad) >= 4
    assert "beta3 >= 0" in bad and "chi3 > 0" in bad and "eta > 0" in bad


def test_default_preset_strictly_dissipative():
    p = con.ViscousParams.default()
    assert p.validate() == []
    lam, chans = p.dissipation_margins()
    assert lam > 0.1 and (chans > 0.1).all()


# -- tensor bases -----------------------------------------------------------------

def test_basis_norms_and_orthogonality():
    rng = np.random.default_rng(1)
    for _ in range(100):
        M = random_rotation(rng)
        F = M.T.reshape(3, 3, 1, 1)   # field layout, single point
        s, a = con.tensor_bases(F)
        norms_sq = [2.0 / 3.0, 2.0, 0.5, 0.5, 0.5]
        for i in range(5):
            assert abs(np.sum(s[i] ** 2) - norms_sq[i]) < 1e-14
            assert np.max(np.abs(np.einsum("aa...->...", s[i]))) < 1e-14  # traceless
            assert np.max(np.abs(s[i] - np.swapaxes(s[i], 0, 1))) < 1e-14
        for j in range(3):
            assert np.max(np.abs(a[j] + np.swapaxes(a[j], 0, 1))) < 1e-14
            for i in range(5):
                assert abs(np.sum(s[i] * a[j])) < 1e-14
            for j2 in range(3):
                expect = 2.0 if j == j2 else 0.0
                assert abs(np.sum(a[j] * a[j2]) - expect) < 1e-14
        assert abs(np.sum(s[0] * s[1])) < 1e-14


# -- strain tensors ----------------------------------------------------------------

def test_strain_decomposition_exact(grid32):
    v = band_limited(grid32, (3,), 6, 2)
    D, W = con.strain_tensors(v, grid32)
    G = grid32.gradient(v)
    assert np.max(np.abs(D + W - G)) < 1e-14
    assert np.max(np.abs(D - np.swapaxes(D, 0, 1))) == 0.0
    assert np.max(np.abs(W + np.swapaxes(W, 0, 1))) == 0.0


def test_strain_sinusoidal_shear(grid32):
    # v = (sin y, 0, 0): at the crest d_y v_x = 1 so D_xy = D_yx = 1/2 and the
    # spin carries the opposite pair (our gradient is derivative-index first)
    X = grid32.mesh()
    v = np.zeros((3,) + grid32.dims)
    v[0] = np.sin(X[1])
    D, W = con.strain_tensors(v, grid32)
    i0 = (0, 0)
    assert abs(D[0, 1][i0] - 0.5) < 1e-12 and abs(D[1, 0][i0] - 0.5) < 1e-12
    assert abs(W[1, 0][i0] - 0.5) < 1e-12 and abs(W[0, 1][i0] + 0.5) < 1e-12


def test_strain_trace_is_divergence(grid32):
    v = random_divfree(grid32, 6, 1.0, 3)
    D, _ = con.strain_tensors(v, grid32)
    tr = D[0, 0] + D[1, 1] + D[2, 2]
    assert grid32.l2_norm(tr) < 1e-10


def test_symmetry_type_orthogonality(grid32):
    v = band_limited(grid32, (3,), 6, 4)
    D, W = con.strain_tensors(v, grid32)
    F = random_frame_field(grid32, 3, 0.4, 5)
    s, a = con.tensor_bases(F)
    scale = np.max(np.abs(D)) + np.max(np.abs(W))
    for i in range(5):
        assert np.max(np.abs(con.tensor_dot(W, s[i]))) < 1e-14 * max(scale, 1.0)
    for j in range(3):
        assert np.max(np.abs(con.tensor_dot(D, a[j]))) < 1e-14 * max(scale, 1.0)


# -- viscous stress ------------------------------------------------------------------

def test_stress_zero_at_rest(grid32, ep_generic, vp_default):
    F = fa.identity_field(grid32.dims)
    v = np.zeros((3,) + grid32.dims)
    ml = np.zeros((3,) + grid32.dims)
    sig = con.viscous_stress(F, v, vp_default, grid32, rotational_derivs=ml)
    assert np.max(np.abs(sig)) == 0.0


def test_stress_requires_exactly_one_rate_input(grid32, vp_default):
    F = fa.identity_field(grid32.dims)
    v = np.zeros((3,) + grid32.dims)
    with pytest.raises(ValueError):
        con.viscous_stress(F, v, vp_default, grid32)
    with pytest.raises(ValueError):
        con.viscous_stress(F, v, vp_default, grid32,
                           frame_rate=np.zeros_like(F),
                           rotational_derivs=np.zeros((3,) + grid32.dims))


def test_dissipation_quadratic_form_psd(vp_default):
    lam, chans = vp_default.dissipation_margins()
    assert lam >= -1e-14
    assert (chans >= -1e-14).all()


def test_stress_power_nonnegative_frozen_frame(grid32, vp_default):
    # constant frame, zero director rates: the stress power against grad v is
    # a pointwise positive semidefinite quadratic form of the strain scalars
    F = fa.identity_field(grid32.dims)
    v = band_limited(grid32, (3,), 5, 6)
    D, W = con.strain_tensors(v, grid32)
    s, a = con.tensor_bases(F)
    sig = con.viscous_stress(F, v, vp_default, grid32,
                             frame_rate=np.zeros_like(F))
    G = grid32.gradient(v)
    power = np.einsum("ij...,ji...->...", sig, G)
    scale = np.max(np.abs(power))
    assert power.min() > -1e-12 * scale
    # independent assembly of the same quadratic form
    b, er, chi = vp_default.beta, vp_default.eta_rot, vp_default.chi
    ds = [con.tensor_dot(D, s[i]) for i in range(5)]
    wa = [con.tensor_dot(W, a[j]) for j in range(3)]
    oracle = b[1] * ds[0] ** 2 + 2 * b[0] * ds[0] * ds[1] + b[2] * ds[1] ** 2
    for k, (si, ai, bslot) in enumerate(con._K_SLOTS):
        oracle += b[bslot] * ds[si] ** 2 + er[k] * ds[si] * wa[ai] \
            + 0.25 * chi[k] * wa[ai] ** 2
    assert np.max(np.abs(power - oracle)) < 1e-12 * max(scale, 1.0)


def test_onshell_dissipation_identity(grid48, ep_generic, vp_default):
    # stress power plus molecular power reproduces the energy-law integrand
    F = random_frame_field(grid48, 3, 0.3, 7)
    v = random_divfree(grid48, 3, 0.5, 8)
    d = el.FrameDerivatives(F, grid48)
    h = el.molecular_fields(F, ep_generic, grid48, derivs=d)
    ml = el.rotational_variational_derivatives(F, h)
    s, a = con.tensor_bases(F)
    D, W = con.strain_tensors(v, grid48)
    sig = con.viscous_stress(F, v, vp_default, grid48, rotational_derivs=ml,
                             bases=(s, a), strains=(D, W))
    # on-shell material rates
    g = con.alignment_scalars(D, W, (s, a), ml, vp_default)
    wa = [con.tensor_dot(W, a[j]) for j in range(3)]
    c = np.stack([g[k] + 0.5 * wa[con._K_SLOTS[k][1]] for k in range(3)])
    Fdot = np.stack([c[2] * F[1] - c[1] * F[2],
                     -c[2] * F[0] + c[0] * F[2],
                     c[1] * F[0] - c[0] * F[1]])
    Gv = grid48.gradient(v)
    power = np.einsum("ij...,ji...->...", sig, Gv)
    molecular = np.einsum("ic...,ic...->...", h, Fdot)
    dens = con.dissipation_channel_density(D, (s, a), ml, vp_default)
    integrand = sum(dens.values())
    resid = power + molecular - integrand
    assert np.max(np.abs(resid)) < 1e-10 * max(np.max(np.abs(integrand)), 1.0)


def test_v_zero_dissipation_reduces_to_rotational(grid32, ep_generic, vp_default):
    # at v = 0 the molecular power h . Fdot equals the rotational channel
    # pointwise, so the energy density decays at exactly that rate
    F = random_frame_field(grid32, 3, 0.35, 9)
    h = el.molecular_fields(F, ep_generic, grid32)
    ml = el.rotational_variational_derivatives(F, h)
    c = -ml / vp_default.chi.reshape(3, 1, 1)
    Fdot = np.stack([c[2] * F[1] - c[1] * F[2],
                     -c[2] * F[0] + c[0] * F[2],
                     c[1] * F[0] - c[0] * F[1]])
    molecular_power = np.einsum("ic...,ic...->...", h, Fdot)
    rhs = sum(ml[k] ** 2 / vp_default.chi[k] for k in range(3))
    assert np.max(np.abs(molecular_power - rhs)) < 1e-12 * max(np.max(np.abs(rhs)), 1.0)


def test_grid_mismatch(grid32, grid48, vp_default):
    F = fa.identity_field(grid48.dims)
    v = np.zeros((3,) + grid48.dims)
    with pytest.raises(GridMismatch):
        con.viscous_stress(F, v, vp_default, grid32,
                           rotational_derivs=np.zeros((3,) + grid48.dims))
    with pytest.raises(GridMismatch):
        con.strain_tensors(v, grid32)
