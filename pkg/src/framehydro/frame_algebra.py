"""Pointwise SO(3) frame operations.

Two layouts are used:

* a single frame is an ordinary 3x3 matrix ``M`` whose COLUMNS are the three
  directors, ``M[:, i] = n_{i+1}``;
* a frame field is an array of shape ``(3, 3, *dims)`` with ``F[i]`` the
  (i+1)-th director as a 3-component vector field (i.e. the transpose layout,
  director index first).  ``field_to_matrices``/``matrices_to_field`` convert.

The infinitesimal rotation about director k acts on the columns as
``L_k n_i = eps^{ijk} n_j``; stacked over i this spans the tangent space of
SO(3) at the frame, with the orthogonal complement spanned by the six
symmetric combinations below.
"""

from __future__ import annotations

import numpy as np

from .errors import SingularFrame

# Levi-Civita symbol, eps[i, j, k]
EPS = np.zeros((3, 3, 3))
for _i, _j, _k, _s in [(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0),
                       (0, 2, 1, -1.0), (2, 1, 0, -1.0), (1, 0, 2, -1.0)]:
    EPS[_i, _j, _k] = _s

TANGENT_NORM_SQ = np.array([2.0, 2.0, 2.0])
NORMAL_NORM_SQ = np.array([2.0, 2.0, 2.0, 1.0, 1.0, 1.0])


def field_to_matrices(F):
    """(3, 3, *dims) director-major field -> (*dims, 3, 3) column matrices."""
    return np.moveaxis(F, (0, 1), (-1, -2))


def matrices_to_field(M):
    """(*dims, 3, 3) column matrices -> (3, 3, *dims) director-major field."""
    return np.moveaxis(M, (-1, -2), (0, 1))


def identity_field(dims):
    F = np.zeros((3, 3) + tuple(dims))
    for i in range(3):
        F[i, i] = 1.0
    return F


def tangent_basis(M):
    """Orthogonal basis of T_M SO(3): three 3x3 matrices, |V_k|^2 = 2."""
    n1, n2, n3 = M[:, 0], M[:, 1], M[:, 2]
    z = np.zeros(3)
    V1 = np.column_stack([z, n3, -n2])
    V2 = np.column_stack([-n3, z, n1])
    V3 = np.column_stack([n2, -n1, z])
    return V1, V2, V3


def normal_basis(M):
    """Orthogonal basis of the complement of T_M SO(3) in R^{3x3}."""
    n1, n2, n3 = M[:, 0], M[:, 1], M[:, 2]
    z = np.zeros(3)
    return (np.column_stack([z, n3, n2]),
            np.column_stack([n3, z, n1]),
            np.column_stack([n2, n1, z]),
            np.column_stack([n1, z, z]),
            np.column_stack([z, n2, z]),
            np.column_stack([z, z, n3]))


def rotational_derivative_of_frame(M, k):
    """Matrix whose i-th column is L_k n_i = eps^{ijk} n_j (k in 1..3)."""
    k = int(k) - 1
    out = np.zeros_like(M)
    for i in range(3):
        for j in range(3):
            if EPS[i, j, k] != 0.0:
                out[:, i] += EPS[i, j, k] * M[:, j]
    return out


def orthogonal_decompose(M, A, B):
    """Split the inner product A . B along the tangent/normal bases at M.

    Returns (tangent_terms[3], normal_terms[6], total); the total equals
    sum(A_ij B_ij) identically.
    """
    Vs = tangent_basis(M)
    Ws = normal_basis(M)
    tang = np.array([np.sum(A * V) * np.sum(B * V) / nv
                     for V, nv in zip(Vs, TANGENT_NORM_SQ)])
    norm = np.array([np.sum(A * W) * np.sum(B * W) / nw
                     for W, nw in zip(Ws, NORMAL_NORM_SQ)])
    return tang, norm, float(tang.sum() + norm.sum())


# -- retraction ------------------------------------------------------------

def _polar_rotation(mats):
    """Nearest rotation (polar factor) of a (..., 3, 3) stack via SVD."""
    U, s, Vt = np.linalg.svd(mats)
    if np.min(s) < 1e-8:
        raise SingularFrame(f"singular value {np.min(s):.3e} below 1e-8")
    det = np.linalg.det(U @ Vt)
    U = U.copy()
    U[..., :, 2] *= np.where(det < 0.0, -1.0, 1.0)[..., None]
    return U @ Vt


def retract(M):
    """Project a near-rotation 3x3 matrix onto SO(3) (Frobenius-nearest)."""
    return _polar_rotation(np.asarray(M, dtype=float))


def retract_field(F):
    """Polar retraction of every frame in a (3, 3, *dims) field."""
    return matrices_to_field(_polar_rotation(field_to_matrices(F)))


# -- exponential update ------------------------------------------------------

def _rodrigues(omega):
    """Rotation matrices exp([omega]_x) for omega of shape (3, ...).

    Returns R with shape (3, 3, ...), R[a, b] the (row a, col b) entry.
    A series expansion takes over below |omega| = 1e-4 to avoid cancellation.
    """
    omega = np.asarray(omega, dtype=float)
    theta2 = np.sum(omega * omega, axis=0)
    theta = np.sqrt(theta2)
    small = theta < 1e-4
    theta_safe = np.where(small, 1.0, theta)
    A = np.where(small, 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0,
                 np.sin(theta) / theta_safe)
    B = np.where(small, 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0,
                 (1.0 - np.cos(theta)) / np.where(small, 1.0, theta2))
    c = 1.0 - B * theta2  # = cos(theta), assembled without re-evaluating cos

    R = np.empty((3, 3) + omega.shape[1:])
    for a in range(3):
        for b in range(3):
            R[a, b] = B * omega[a] * omega[b]
            if a == b:
                R[a, b] += c
        # skew part: sum_c -eps[a, b, c] omega_c gives +A*[omega]_x
    R[0, 1] -= A * omega[2]
    R[1, 0] += A * omega[2]
    R[0, 2] += A * omega[1]
    R[2, 0] -= A * omega[1]
    R[1, 2] -= A * omega[0]
    R[2, 1] += A * omega[0]
    return R


def exp_update(M, omega):
    """Rotate a frame by body-frame angular increment omega (|omega| < pi).

    The columns evolve as n1' = w3 n2 - w2 n3 (etc.) to first order, i.e.
    M -> M @ exp([omega]_x); exactly orthonormal up to rounding.
    """
    R = _rodrigues(np.asarray(omega, dtype=float).reshape(3))
    return np.asarray(M) @ R


def exp_update_field(F, omega):
    """Same update applied gridwise: F (3,3,*dims), omega (3,*dims)."""
    R = _rodrigues(omega)
    # new n_c = sum_a R[a, c] n_a
    return np.einsum("ak...,ac...->ck...", F, R)


def orthonormality_defect(F):
    """max over the grid of || F^T F - I ||_Frobenius."""
    M = field_to_matrices(F)
    G = np.swapaxes(M, -1, -2) @ M
    G[..., 0, 0] -= 1.0
    G[..., 1, 1] -= 1.0
    G[..., 2, 2] -= 1.0
    return float(np.sqrt(np.sum(G * G, axis=(-1, -2))).max())


def rotate_frame_field(F, R):
    """Apply a fixed global rotation R (3x3) to every director."""
    return np.einsum("ab,ib...->ia...", R, F)
