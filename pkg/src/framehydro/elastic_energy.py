"""Biaxial orientational elasticity on discrete frame fields.

Provides the elastic energy density in its original (twelve bulk constants
plus three divergence terms) and reformulated (Dirichlet part plus
nonnegative remainder) forms, the molecular fields, the rotational
variational derivatives, the elastic stress, and the body force.  All
operations take an injected differentiation backend (spectral by default,
4th-order central differences as a fallback) and are pure field transforms.

The divergence-type surface terms are evaluated through their exact
product-rule expansion  div[(n.grad)n - (div n)n] = tr((grad n)^2) - (div n)^2,
an algebraic identity in the first-derivative tensor.  Using it keeps the
original and reformulated densities equal pointwise to rounding and keeps
the surface terms exact null Lagrangians on the discrete torus.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch
from .frame_algebra import EPS

# bulk twist constant K_twist[i, j] multiplies (n_{i+1} . curl n_{j+1})^2
_TWIST_SLOTS = [(0, 0, 3), (1, 1, 4), (2, 2, 5),
                (2, 0, 6), (0, 1, 7), (1, 2, 8),
                (1, 0, 9), (2, 1, 10), (0, 2, 11)]


@dataclass
class ElasticParams:
    """Frank-type constants of the biaxial elastic energy.

    ``K`` holds the twelve positive bulk constants.  The derived fields
    follow the reformulation: ``gamma[i]`` is the minimum of the four bulk
    constants attached to director i+1, ``k_div`` and ``k_twist`` are the
    nonnegative remainders (at least one entry in each gamma-group is zero).
    """

    K: np.ndarray
    gamma: np.ndarray = field(init=False)
    k_div: np.ndarray = field(init=False)
    k_twist: np.ndarray = field(init=False)

    def __post_init__(self):
        self.K = np.asarray(self.K, dtype=float)
        if self.K.shape != (12,):
            raise ValueError("K must hold twelve constants")
        if np.any(self.K <= 0.0):
            raise ValueError("all bulk constants must be positive")
        K = self.K
        self.gamma = np.array([min(K[0], K[3], K[6], K[9]),
                               min(K[1], K[4], K[7], K[10]),
                               min(K[2], K[5], K[8], K[11])])
        self.k_div = K[:3] - self.gamma
        kt = np.zeros((3, 3))
        for i, j, slot in _TWIST_SLOTS:
            kt[i, j] = K[slot] - self.gamma[j]
        self.k_twist = kt

    @property
    def K_twist(self):
        """Bulk twist constants arranged as the (projector, curled) matrix."""
        kt = np.zeros((3, 3))
        for i, j, slot in _TWIST_SLOTS:
            kt[i, j] = self.K[slot]
        return kt

    @property
    def gamma_min(self):
        return float(self.gamma.min())

    @classmethod
    def isotropic(cls, c=1.0):
        return cls(np.full(12, float(c)))


class FrameDerivatives:
    """First/second derivative bundle of a frame field, computed once.

    Attributes (director index first, trailing grid axes):
      G     (3, 3, 3, ...)  G[i, a, c] = d_a n_{i+1, c}
      div   (3, ...)        div n_{i+1}
      curl  (3, 3, ...)     curl n_{i+1}
      twist (3, 3, ...)     twist[i, j] = n_{i+1} . curl n_{j+1}
      lap   (3, 3, ...)     Laplacian of each director (lazy)
    """

    def __init__(self, F, backend):
        backend.check(F, (3, 3))
        self.F = F
        self.backend = backend
        self.G = np.moveaxis(backend.gradient(F), 0, 1)
        self.div = np.einsum("iaa...->i...", self.G)
        self.curl = np.einsum("cab,iab...->ic...", EPS, self.G)
        self.twist = np.einsum("ic...,jc...->ij...", F, self.curl)
        self._lap = None

    @property
    def lap(self):
        if self._lap is None:
            self._lap = self.backend.laplacian(self.F)
        return self._lap


def density_reformulated(F, params, backend, derivs=None):
    """Pointwise elastic density: Dirichlet part plus nonnegative remainder."""
    d = derivs or FrameDerivatives(F, backend)
    out = 0.5 * np.einsum("i,iac...->...", params.gamma, d.G * d.G)
    out += 0.5 * np.einsum("i,i...->...", params.k_div, d.div * d.div)
    out += 0.5 * np.einsum("ij,ij...->...", params.k_twist, d.twist * d.twist)
    return out


def density_original(F, params, backend, surface_gamma=None, derivs=None):
    """Pointwise elastic density with the twelve bulk terms spelled out.

    ``surface_gamma`` overrides the coefficients of the three null-Lagrangian
    divergence terms (they default to the reformulation minima, which makes
    this density equal ``density_reformulated`` pointwise).
    """
    d = derivs or FrameDerivatives(F, backend)
    sg = params.gamma if surface_gamma is None else np.asarray(surface_gamma, float)
    out = 0.5 * np.einsum("i,i...->...", params.K[:3], d.div * d.div)
    out += 0.5 * np.einsum("ij,ij...->...", params.K_twist, d.twist * d.twist)
    # div[(n.grad)n - (div n)n] expanded exactly in first derivatives
    surface = np.einsum("iac...,ica...->i...", d.G, d.G) - d.div * d.div
    out += 0.5 * np.einsum("i,i...->...", sg, surface)
    return out


def total_energy(F, params, backend, derivs=None):
    """Torus integral of the elastic density."""
    return backend.integrate(density_reformulated(F, params, backend, derivs))


def molecular_fields(F, params, backend, derivs=None):
    """Negative variational derivatives of the energy w.r.t. the directors.

    Returns h of shape (3, 3, *dims), h[i] the field driving director i+1:
    h_i = gamma_i Lap n_i + k_i grad div n_i
          - sum_j k_twist[j,i] curl(twist[j,i] n_j)
          - sum_j k_twist[i,j] twist[i,j] curl n_j
    """
    d = derivs or FrameDerivatives(F, backend)
    h = params.gamma.reshape(3, 1, *([1] * (F.ndim - 2))) * d.lap
    gd = np.moveaxis(backend.gradient(d.div), 0, 1)  # (i, comp, ...)
    h = h + params.k_div.reshape(3, 1, *([1] * (F.ndim - 2))) * gd
    # curl of the projected-twist vectors, all (j, i) pairs in one call
    P = np.einsum("ji...,jc...->jic...", d.twist, F)
    curlP = backend.curl(P)
    h = h - np.einsum("ji,jic...->ic...", params.k_twist, curlP)
    h = h - np.einsum("ij,ij...,jc...->ic...", params.k_twist, d.twist, d.curl)
    return h


def rotational_variational_derivatives(F, h):
    """Tangent-space gradient components of the energy at each grid point.

    Returns the three scalar fields (n2.h3 - n3.h2, n3.h1 - n1.h3,
    n1.h2 - n2.h1); zero exactly at equilibria.
    """
    if F.shape != h.shape:
        raise GridMismatch(f"frame {F.shape} vs molecular field {h.shape}")
    def dot(i, j):
        return np.einsum("c...,c...->...", F[i], h[j])
    return np.stack([dot(1, 2) - dot(2, 1),
                     dot(2, 0) - dot(0, 2),
                     dot(0, 1) - dot(1, 0)])


def elastic_stress(F, params, backend, derivs=None):
    """Distortion stress, oriented so its divergence contracts the 2nd index.

    sigma[i, j] = - sum_a gamma_a d_j n_a . d_i n_a
                  - sum_a k_a (div n_a) d_i n_{a,j}
                  - the two projected antisymmetric-gradient groups weighted
                    by k_twist (each contracted against d_i n_a).
    """
    d = derivs or FrameDerivatives(F, backend)
    G = d.G
    A = G - np.swapaxes(G, 1, 2)          # A[a, p, q] = d_p n_q - d_q n_p
    sig = -np.einsum("a,ajk...,aik...->ij...", params.gamma, G, G)
    sig -= np.einsum("a,a...,aij...->ij...", params.k_div, d.div, G)
    csum = params.k_twist.sum(axis=0)      # sum over projector index
    sig -= np.einsum("a,ajp...,aip...->ij...", csum, A, G)
    B = np.einsum("bl...,apl...->bap...", F, A)
    sig -= np.einsum("ba,bj...,bap...,aip...->ij...", params.k_twist, F, B, G)
    C = np.einsum("bl...,alj...->baj...", F, A)
    Dn = np.einsum("bp...,aip...->bai...", F, G)
    sig -= np.einsum("ba,baj...,bai...->ij...", params.k_twist, C, Dn)
    return sig


def body_force(F, h, backend, derivs=None):
    """Velocity forcing equivalent to div(elastic stress) up to a gradient.

    bf_i = (d_i n1 . n2) L3 + (d_i n3 . n1) L2 + (d_i n2 . n3) L1,
    with L_k the rotational variational derivatives built from h.
    """
    d = derivs or FrameDerivatives(F, backend)
    ml = rotational_variational_derivatives(F, h)
    out = np.einsum("ic...,c...->i...", d.G[0], F[1]) * ml[2]
    out += np.einsum("ic...,c...->i...", d.G[2], F[0]) * ml[1]
    out += np.einsum("ic...,c...->i...", d.G[1], F[2]) * ml[0]
    return out
