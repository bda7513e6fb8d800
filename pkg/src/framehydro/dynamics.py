"""Right-hand-side assembly for the coupled frame/velocity system.

The frame moves by pointwise body-frame rotation: its material rate is
n1' = w3 n2 - w2 n3 (and cyclic), with

    w1 = W.a3/2 + (eta1/chi1) D.s5 - L1/chi1
    w2 = W.a2/2 + (eta2/chi2) D.s4 - L2/chi2
    w3 = W.a1/2 + (eta3/chi3) D.s3 - L3/chi3

where L_k are the rotational variational derivatives of the elastic energy.
Advection is folded into the same body-rate language: the tangential part of
-v.grad F is exactly the body rate triple (-(v.grad n2).n3, -(v.grad n3).n1,
-(v.grad n1).n2); its normal part vanishes identically for orthonormal
frames and is dropped (the exponential update then keeps the frame exactly
on SO(3)).

The velocity tendency is -v.grad v + div(viscous stress) + div(elastic
stress), with the solvent diffusion term optional (the IMEX integrator
handles it implicitly) and the pressure removed downstream by Leray
projection.  Nonlinear products that feed the velocity equation are
dealiased with the grid's 2/3 mask.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import constitutive as con
from . import elastic_energy as el


@dataclass
class Tendency:
    """Assembled rates: body angular velocity (advection included) and the
    explicit velocity tendency (no pressure, no solvent diffusion)."""
    omega_field: np.ndarray
    dv_field: np.ndarray


class Assembly:
    """Shared per-evaluation scratch: derivative bundles, molecular fields,
    tensor bases, strains, and the coupling scalars."""

    def __init__(self, F, v, elastic, visc, grid, couple_elastic=True, couple_flow=True):
        self.F, self.v, self.grid = F, v, grid
        self.elastic, self.visc = elastic, visc
        self.couple_elastic = couple_elastic
        self.couple_flow = couple_flow
        self.derivs = el.FrameDerivatives(F, grid)
        self.bases = con.tensor_bases(F)
        self.strains = con.strain_tensors(v, grid)
        if couple_elastic:
            self.h = el.molecular_fields(F, elastic, grid, derivs=self.derivs)
            self.ml = el.rotational_variational_derivatives(F, self.h)
        else:
            self.h = np.zeros_like(F)
            self.ml = np.zeros((3,) + F.shape[2:])


def frame_angular_velocity(F, v, elastic, visc, grid, include_elastic=True,
                           include_flow=True, asm=None):
    """Material body rotation rates w_k of the frame (advection excluded)."""
    asm = asm or Assembly(F, v, elastic, visc, grid,
                          couple_elastic=include_elastic, couple_flow=include_flow)
    D, W = asm.strains
    s, a = asm.bases
    omega = np.empty((3,) + F.shape[2:])
    for k in range(3):
        si, ai, _ = con._K_SLOTS[k]
        omega[k] = -asm.ml[k] / visc.chi[k]
        if include_flow:
            omega[k] += 0.5 * con.tensor_dot(W, a[ai]) \
                + (visc.eta_rot[k] / visc.chi[k]) * con.tensor_dot(D, s[si])
    return omega


def frame_advection_rates(F, v, grid, derivs=None, dealias=True):
    """Body rates of -v.grad F: (-(v.grad n2).n3, -(v.grad n3).n1, -(v.grad n1).n2)."""
    d = derivs or el.FrameDerivatives(F, grid)
    vgF = np.einsum("a...,iac...->ic...", v, d.G)
    rates = -np.stack([
        np.einsum("c...,c...->...", vgF[1], F[2]),
        np.einsum("c...,c...->...", vgF[2], F[0]),
        np.einsum("c...,c...->...", vgF[0], F[1]),
    ])
    return grid.dealias(rates) if dealias else rates


def velocity_tendency(F, v, elastic, visc, grid, include_diffusion=False,
                      use_body_force=False, couple_stress=True, dealias=True,
                      asm=None):
    """Explicit velocity tendency (pressure applied later via projection).

    ``use_body_force`` switches the elastic forcing from div(elastic stress)
    to the direct body-force form; the two differ by a pure gradient and give
    identical Leray-projected tendencies.
    """
    asm = asm or Assembly(F, v, elastic, visc, grid, couple_elastic=couple_stress)
    G = asm.strains[0] + asm.strains[1]          # grad v, derivative index first
    adv = np.einsum("a...,ab...->b...", v, G)
    dv = -(grid.dealias(adv) if dealias else adv)
    if couple_stress:
        sig = con.viscous_stress(F, v, visc, grid, rotational_derivs=asm.ml,
                                 bases=asm.bases, strains=asm.strains)
        if dealias:
            sig = grid.dealias(sig)
        dv = dv + grid.div_tensor(sig)
        if use_body_force:
            forcing = el.body_force(F, asm.h, grid, derivs=asm.derivs)
            dv = dv + (grid.dealias(forcing) if dealias else forcing)
        else:
            sig_d = el.elastic_stress(F, elastic, grid, derivs=asm.derivs)
            if dealias:
                sig_d = grid.dealias(sig_d)
            dv = dv + grid.div_tensor(sig_d)
    if include_diffusion:
        dv = dv + visc.eta * grid.laplacian(v)
    return dv


def tendency(F, v, elastic, visc, grid, include_diffusion=False,
             couple_elastic=True, couple_flow=True, couple_stress=True):
    """Full explicit tendency pair (omega includes the advection rates)."""
    asm = Assembly(F, v, elastic, visc, grid,
                   couple_elastic=couple_elastic, couple_flow=couple_flow)
    omega = frame_angular_velocity(F, v, elastic, visc, grid,
                                   include_elastic=couple_elastic,
                                   include_flow=couple_flow, asm=asm)
    omega = omega + frame_advection_rates(F, v, grid, derivs=asm.derivs)
    dv = velocity_tendency(F, v, elastic, visc, grid,
                           include_diffusion=include_diffusion,
                           couple_stress=couple_stress, asm=asm)
    return Tendency(omega, dv)


@dataclass
class DissipationChannels:
    """Integrated dissipation channels of the energy law (all >= 0 for
    validated coefficients)."""
    viscous: float
    rotational: float
    align_block: float
    shear_s3: float
    shear_s4: float
    shear_s5: float

    @property
    def total(self):
        return (self.viscous + self.rotational + self.align_block
                + self.shear_s3 + self.shear_s4 + self.shear_s5)

    def as_dict(self):
        return {"viscous": self.viscous, "rotational": self.rotational,
                "align_block": self.align_block, "shear_s3": self.shear_s3,
                "shear_s4": self.shear_s4, "shear_s5": self.shear_s5,
                "total": self.total}


def energy_production_audit(F, v, elastic, visc, grid, asm=None):
    """Evaluate every dissipation channel on the current state.

    The total equals -d/dt (kinetic + elastic energy) along the on-shell
    dynamics, up to time-discretization error.
    """
    asm = asm or Assembly(F, v, elastic, visc, grid)
    D, _ = asm.strains
    dens = con.dissipation_channel_density(D, asm.bases, asm.ml, visc)
    Gv = asm.strains[0] + asm.strains[1]
    return DissipationChannels(
        viscous=visc.eta * grid.l2_norm_sq(Gv),
        rotational=grid.integrate(dens["rotational"]),
        align_block=grid.integrate(dens["align_block"]),
        shear_s3=grid.integrate(dens["shear_s3"]),
        shear_s4=grid.integrate(dens["shear_s4"]),
        shear_s5=grid.integrate(dens["shear_s5"]),
    )
