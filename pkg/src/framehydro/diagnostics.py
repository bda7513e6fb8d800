"""Analytical diagnostics on discrete states.

Higher-order energy/dissipation functionals, the projected molecular-field
combinations entering them, the two sides of the rotational dissipative
estimates (reported, never asserted: their constants are non-constructive),
Sobolev norms, and the blow-up monitor.

Powers of the Laplacian are applied as spectral multipliers; beyond s = 3
float64 round-off dominates, so that is a hard cap here (SLimitExceeded).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import constitutive as con
from . import dynamics as dyn
from . import elastic_energy as el
from .errors import SLimitExceeded
from .frame_algebra import orthonormality_defect

S_MAX = 3


def _check_s(s, cap=S_MAX):
    s = int(s)
    if s < 0:
        raise SLimitExceeded("s must be a nonnegative integer")
    if s > cap:
        raise SLimitExceeded(f"s = {s} beyond float64 spectral limit (max {cap})")
    return s


@dataclass
class EnergyFunctionals:
    """E_s and D_s with their term-by-term breakdown."""
    s: int
    elastic: float
    kinetic: float
    frame_high: tuple          # the three per-director high-order energies
    velocity_high: float       # ||lap^s v||^2 / 2
    d_viscous: float           # eta ||grad v||^2
    d_frame: float             # (2 gamma^2 / chi) ||lap F||^2
    d_frame_high: float        # (gamma^2 / 4 chi) ||lap^{s+1} F||^2
    d_velocity_high: float     # eta ||grad lap^s v||^2
    frame_high_terms: tuple    # per-director (dirichlet, div, twist) pieces

    @property
    def e_total(self):
        return self.elastic + self.kinetic + sum(self.frame_high) + self.velocity_high

    @property
    def d_total(self):
        return self.d_viscous + self.d_frame + self.d_frame_high + self.d_velocity_high


def energy_functionals(F, v, elastic, visc, grid, s):
    """Evaluate the order-s energy and dissipation functionals.

    The order-s frame energy of director i is
    (gamma_i ||lap^s grad n_i||^2 + k_i ||lap^s div n_i||^2
     + sum_j k_twist[j,i] ||n_j . lap^s curl n_i||^2) / 2,
    and at s = 0 their sum collapses to the elastic energy itself.
    """
    s = _check_s(s)
    grid.check(F, (3, 3))
    grid.check(v, (3,))
    d = el.FrameDerivatives(F, grid)

    gradF_s = grid.laplacian_power(np.moveaxis(grid.gradient(F), 0, 1), s)
    div_s = grid.laplacian_power(d.div, s)
    curl_s = grid.laplacian_power(d.curl, s)
    proj = np.einsum("jc...,ic...->ji...", F, curl_s)   # n_j . lap^s curl n_i

    frame_terms = []
    for i in range(3):
        dir_term = 0.5 * elastic.gamma[i] * grid.l2_norm_sq(gradF_s[i])
        div_term = 0.5 * elastic.k_div[i] * grid.l2_norm_sq(div_s[i])
        twist_term = 0.5 * sum(elastic.k_twist[j, i] * grid.l2_norm_sq(proj[j, i])
                               for j in range(3))
        frame_terms.append((dir_term, div_term, twist_term))
    frame_high = tuple(sum(t) for t in frame_terms)

    lap_s_v = grid.laplacian_power(v, s)
    gamma, chi = elastic.gamma_min, visc.chi_max
    return EnergyFunctionals(
        s=s,
        elastic=el.total_energy(F, elastic, grid, derivs=d),
        kinetic=0.5 * grid.l2_norm_sq(v),
        frame_high=frame_high,
        velocity_high=0.5 * grid.l2_norm_sq(lap_s_v),
        d_viscous=visc.eta * grid.l2_norm_sq(grid.gradient(v)),
        d_frame=(2.0 * gamma ** 2 / chi) * grid.l2_norm_sq(grid.laplacian(F)),
        d_frame_high=(gamma ** 2 / (4.0 * chi))
        * grid.l2_norm_sq(grid.laplacian_power(F, s + 1)),
        d_velocity_high=visc.eta * grid.l2_norm_sq(grid.gradient(lap_s_v)),
        frame_high_terms=tuple(frame_terms),
    )


def h_delta_s(F, elastic, grid, s, h=None):
    """The three frame-projected lap^s molecular-field combinations.

    Row k is the cyclic difference n_i . lap^s h_j - n_j . lap^s h_i; at
    s = 0 this is exactly the rotational variational derivative triple.
    """
    s = _check_s(s)
    grid.check(F, (3, 3))
    if h is None:
        h = el.molecular_fields(F, elastic, grid)
    hs = grid.laplacian_power(h, s)
    return el.rotational_variational_derivatives(F, hs)


@dataclass
class DissipativeEstimateReport:
    """Both sides of the rotational dissipative estimates, never asserted.

    ``ratio`` compares the rotational dissipation against its leading
    coercive term (2 gamma^2 / chi) ||lap F||^2; ``ratio_high`` does the same
    at derivative order s against (gamma^2 / 4 chi) ||lap^{s+1} F||^2.  A
    ratio below one only flags the state for inspection: the discarded
    lower-order terms carry a non-constructive constant.
    """
    s: int
    lhs: float
    leading: float
    ratio: float
    flagged: bool
    lhs_high: float
    leading_high: float
    ratio_high: float
    flagged_high: bool


def _safe_ratio(lhs, lead, tiny=1e-300):
    if abs(lead) < tiny:
        return 1.0
    return lhs / lead


def dissipative_estimate_report(F, elastic, visc, grid, s):
    s = _check_s(s, cap=2)
    h = el.molecular_fields(F, elastic, grid)
    ml = el.rotational_variational_derivatives(F, h)
    lhs = sum(grid.l2_norm_sq(ml[k]) / visc.chi[k] for k in range(3))
    gamma, chi = elastic.gamma_min, visc.chi_max
    lead = (2.0 * gamma ** 2 / chi) * grid.l2_norm_sq(grid.laplacian(F))

    hs = h_delta_s(F, elastic, grid, s, h=h)
    lhs_high = sum(grid.l2_norm_sq(hs[k]) / visc.chi[k] for k in range(3))
    lead_high = (gamma ** 2 / (4.0 * chi)) \
        * grid.l2_norm_sq(grid.laplacian_power(F, s + 1))

    r = _safe_ratio(lhs, lead)
    rh = _safe_ratio(lhs_high, lead_high)
    return DissipativeEstimateReport(
        s=s, lhs=lhs, leading=lead, ratio=r, flagged=r < 1.0,
        lhs_high=lhs_high, leading_high=lead_high, ratio_high=rh,
        flagged_high=rh < 1.0)


def sobolev_state_norms(F, v, grid, s):
    """(||grad F||_{H^{2s}}^2, ||v||_{H^{2s}}^2), the E_s-equivalent pair."""
    s = _check_s(s)
    gF = grid.gradient(F)
    return grid.sobolev_norm_sq(gF, 2 * s), grid.sobolev_norm_sq(v, 2 * s)


def blowup_integrand(F, v, grid):
    """max|curl v| + sum_i (max|grad n_i|)^2, the regularity monitor rate.

    Grid maxima stand in for the sup norms (a lower bound, adequate for
    resolved fields).
    """
    curl = grid.curl(v)
    curl_inf = float(np.sqrt(np.einsum("c...,c...->...", curl, curl)).max())
    G = np.moveaxis(grid.gradient(F), 0, 1)
    mags = np.sqrt(np.einsum("iac...,iac...->i...", G, G))
    grad_f_sq = float(sum(mags[i].max() ** 2 for i in range(3)))
    return curl_inf, grad_f_sq


def blowup_monitor(times, integrands):
    """Cumulative trapezoidal integral of the monitored quantity."""
    times = np.asarray(times, dtype=float)
    vals = np.asarray(integrands, dtype=float)
    if times.shape != vals.shape:
        raise ValueError("times and integrands must align")
    out = np.zeros_like(vals)
    if len(vals) > 1:
        inc = 0.5 * (vals[1:] + vals[:-1]) * np.diff(times)
        out[1:] = np.cumsum(inc)
    return out


def sample_columns(s_values):
    """Ledger column names in their fixed order."""
    cols = ["t", "kinetic", "elastic", "total_energy"]
    for s in s_values:
        cols += [f"e_s{s}", f"d_s{s}"]
    cols += ["ch_viscous", "ch_rotational", "ch_align_block",
             "ch_shear_s3", "ch_shear_s4", "ch_shear_s5", "ch_total",
             "curl_v_inf", "grad_f_sq_inf", "blowup_integral",
             "orth_defect", "div_v_l2"]
    return cols


def compute_sample(state, grid, elastic, visc, s_values):
    """All instantaneous ledger entries for one state (no history terms).

    The cumulative blow-up integral is left at zero; recorders accumulate it
    across samples with the trapezoidal rule.
    """
    F, v = state.F, state.v
    row = {"t": state.t}
    asm = dyn.Assembly(F, v, elastic, visc, grid)
    row["kinetic"] = 0.5 * grid.l2_norm_sq(v)
    row["elastic"] = el.total_energy(F, elastic, grid, derivs=asm.derivs)
    row["total_energy"] = row["kinetic"] + row["elastic"]
    for s in s_values:
        fn = energy_functionals(F, v, elastic, visc, grid, s)
        row[f"e_s{s}"] = fn.e_total
        row[f"d_s{s}"] = fn.d_total
    ch = dyn.energy_production_audit(F, v, elastic, visc, grid, asm=asm)
    row["ch_viscous"] = ch.viscous
    row["ch_rotational"] = ch.rotational
    row["ch_align_block"] = ch.align_block
    row["ch_shear_s3"] = ch.shear_s3
    row["ch_shear_s4"] = ch.shear_s4
    row["ch_shear_s5"] = ch.shear_s5
    row["ch_total"] = ch.total
    curl_inf, grad_f_sq = blowup_integrand(F, v, grid)
    row["curl_v_inf"] = curl_inf
    row["grad_f_sq_inf"] = grad_f_sq
    row["blowup_integral"] = 0.0
    row["orth_defect"] = orthonormality_defect(F)
    row["div_v_l2"] = grid.l2_norm(grid.divergence(v))
    return {k: float(val) for k, val in row.items()}
