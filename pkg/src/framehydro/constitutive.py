"""Tensor bases, strain tensors, coefficient validation, and the viscous stress.

Sign conventions (fixed once here and relied on everywhere):

* The velocity gradient is stored derivative-index first, G[i, j] = d_i v_j.
  D = (G + G^T)/2 and W = (G - G^T)/2.  With the antisymmetric bases below,
  the scalars W.a_k are twice the body components of half the vorticity:
  (1/2) W.a1 = (1/2) curl v . n3, so a frame driven by these scalars
  co-rotates with the local fluid angular velocity.
* Stress tensors are oriented so the momentum equation reads
  dv_i/dt = ... + d_j sigma[i, j]: the divergence contracts the second
  index.  With that orientation the antisymmetric part of the viscous
  stress enters with the sign that closes the energy balance (see
  dynamics.energy_production_audit and its tests).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch


@dataclass
class ViscousParams:
    """Constitutive coefficients of the flow/frame coupling.

    beta[0] is the cross coefficient of the (s1, s2) block; beta[1..5] the
    diagonal ones; chi are the rotational friction constants; eta_rot the
    flow-alignment constants; eta the solvent viscosity.
    """

    beta: np.ndarray
    chi: np.ndarray
    eta_rot: np.ndarray
    eta: float

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        self.chi = np.asarray(self.chi, dtype=float)
        self.eta_rot = np.asarray(self.eta_rot, dtype=float)
        self.eta = float(self.eta)
        if self.beta.shape != (6,) or self.chi.shape != (3,) or self.eta_rot.shape != (3,):
            raise ValueError("beta needs 6 entries, chi and eta_rot 3 each")

    def validate(self):
        """Return every violated nonnegative-definiteness condition (empty = ok)."""
        b, chi, er = self.beta, self.chi, self.eta_rot
        bad = []
        for i in range(1, 6):
            if b[i] < 0.0:
                bad.append(f"beta{i} >= 0")
        for j in range(3):
            if chi[j] <= 0.0:
                bad.append(f"chi{j+1} > 0")
        if self.eta <= 0.0:
            bad.append("eta > 0")
        if b[0] ** 2 > b[1] * b[2]:
            bad.append("beta0^2 <= beta1*beta2")
        pairs = [("eta1^2 <= beta5*chi1", er[0] ** 2, b[5] * chi[0]),
                 ("eta2^2 <= beta4*chi2", er[1] ** 2, b[4] * chi[1]),
                 ("eta3^2 <= beta3*chi3", er[2] ** 2, b[3] * chi[2])]
        for name, lhs, rhs in pairs:
            if lhs > rhs:
                bad.append(name)
        return bad

    @property
    def is_valid(self):
        return not self.validate()

    @property
    def chi_max(self):
        return float(self.chi.max())

    @property
    def chi_min(self):
        return float(self.chi.min())

    def dissipation_margins(self):
        """(min eigenvalue of the (s1,s2) block, the three scalar channels)."""
        block = np.array([[self.beta[1], self.beta[0]], [self.beta[0], self.beta[2]]])
        lam = np.linalg.eigvalsh(block).min()
        chans = np.array([self.beta[3] - self.eta_rot[2] ** 2 / self.chi[2],
                          self.beta[4] - self.eta_rot[1] ** 2 / self.chi[1],
                          self.beta[5] - self.eta_rot[0] ** 2 / self.chi[0]])
        return float(lam), chans

    @classmethod
    def default(cls, margin=0.5):
        """Coefficient preset sitting at the definiteness equalities scaled by
        ``margin`` (margin < 1 keeps every dissipation channel strictly positive)."""
        beta = np.array([np.sqrt(margin), 1.0, 1.0, 1.0, 1.0, 1.0])
        chi = np.ones(3)
        eta_rot = np.sqrt(margin * np.array([beta[5] * chi[0],
                                             beta[4] * chi[1],
                                             beta[3] * chi[2]]))
        return cls(beta, chi, eta_rot, 1.0)


def tensor_bases(F):
    """Local tensor bases from a frame field: five symmetric traceless s_i
    and three antisymmetric a_j, shapes (5, 3, 3, *dims) and (3, 3, 3, *dims)."""
    n1, n2, n3 = F[0], F[1], F[2]

    def outer(u, w):
        return np.einsum("a...,b...->ab...", u, w)

    eye = np.zeros((3, 3) + F.shape[2:])
    for a in range(3):
        eye[a, a] = 1.0
    s = np.stack([
        outer(n1, n1) - eye / 3.0,
        outer(n2, n2) - outer(n3, n3),
        0.5 * (outer(n1, n2) + outer(n2, n1)),
        0.5 * (outer(n1, n3) + outer(n3, n1)),
        0.5 * (outer(n2, n3) + outer(n3, n2)),
    ])
    a = np.stack([
        outer(n1, n2) - outer(n2, n1),
        outer(n3, n1) - outer(n1, n3),
        outer(n2, n3) - outer(n3, n2),
    ])
    return s, a


def tensor_dot(T1, T2):
    """Full contraction over the two leading tensor axes."""
    return np.einsum("ab...,ab...->...", T1, T2)


def strain_tensors(v, backend):
    """Rate-of-strain D and spin W from a velocity field; D + W = grad v."""
    backend.check(v, (3,))
    G = backend.gradient(v)
    D = 0.5 * (G + np.swapaxes(G, 0, 1))
    W = 0.5 * (G - np.swapaxes(G, 0, 1))
    return D, W


# pairing of the rotational index k = 1, 2, 3 with the bases/coefficients:
# k -> (symmetric basis, antisymmetric basis, beta slot)
_K_SLOTS = ((4, 2, 5), (3, 1, 4), (2, 0, 3))


def alignment_scalars(D, W, bases, ml, visc):
    """On-shell alignment rates g_k = (eta_k D.s - L_k)/chi_k for k = 1..3."""
    s, a = bases
    out = []
    for k in range(3):
        si, _, bslot = _K_SLOTS[k]
        ds = tensor_dot(D, s[si])
        out.append((visc.eta_rot[k] * ds - ml[k]) / visc.chi[k])
    return np.stack(out)


def viscous_stress(F, v, params, backend, frame_rate=None, rotational_derivs=None,
                   bases=None, strains=None):
    """Viscous stress tensor field.

    The alignment rates can be supplied in two ways: ``frame_rate`` gives the
    material director rates (shape (3, 3, *dims)) from which
    g_k = (dn/dt . n - W.a/2) is formed, or ``rotational_derivs`` gives the
    three tangent-gradient scalars and the on-shell substitution
    g_k = (eta_k D.s - L_k)/chi_k is used (the default route in the solver).
    """
    backend.check(F, (3, 3))
    backend.check(v, (3,))
    s, a = bases if bases is not None else tensor_bases(F)
    D, W = strains if strains is not None else strain_tensors(v, backend)

    if (frame_rate is None) == (rotational_derivs is None):
        raise ValueError("supply exactly one of frame_rate / rotational_derivs")
    wa = [tensor_dot(W, a[_K_SLOTS[k][1]]) for k in range(3)]
    if frame_rate is not None:
        # g3 = dn1.n2 - W.a1/2, g2 = dn3.n1 - W.a2/2, g1 = dn2.n3 - W.a3/2
        rate_dot = lambda i, j: np.einsum("c...,c...->...", frame_rate[i], F[j])
        g = np.stack([rate_dot(1, 2) - 0.5 * wa[0],
                      rate_dot(2, 0) - 0.5 * wa[1],
                      rate_dot(0, 1) - 0.5 * wa[2]])
    else:
        g = alignment_scalars(D, W, (s, a), rotational_derivs, visc=params)

    ds1 = tensor_dot(D, s[0])
    ds2 = tensor_dot(D, s[1])
    b = params.beta
    sig = (b[1] * ds1 + b[0] * ds2) * s[0] + (b[0] * ds1 + b[2] * ds2) * s[1]
    for k in range(3):
        si, ai, bslot = _K_SLOTS[k]
        dsk = tensor_dot(D, s[si])
        sig = sig + (b[bslot] * dsk - params.eta_rot[k] * g[k]) * s[si]
        sig = sig + (0.5 * params.chi[k] * g[k] - 0.5 * params.eta_rot[k] * dsk) * a[ai]
    return sig


def dissipation_channel_density(D, bases, ml, visc):
    """Pointwise quadratic dissipation channels (viscous solvent one apart).

    Returns dict of scalar fields: the (s1, s2) block, the three alignment
    channels with their eta^2/chi reductions, and the rotational channel.
    """
    s, _ = bases
    ds1 = tensor_dot(D, s[0])
    ds2 = tensor_dot(D, s[1])
    b = visc.beta
    out = {
        "align_block": b[1] * ds1 ** 2 + 2.0 * b[0] * ds1 * ds2 + b[2] * ds2 ** 2,
    }
    names = ("shear_s5", "shear_s4", "shear_s3")
    for k in range(3):
        si, _, bslot = _K_SLOTS[k]
        dsk = tensor_dot(D, s[si])
        out[names[k]] = (b[bslot] - visc.eta_rot[k] ** 2 / visc.chi[k]) * dsk ** 2
    out["rotational"] = sum(ml[k] ** 2 / visc.chi[k] for k in range(3))
    return out
