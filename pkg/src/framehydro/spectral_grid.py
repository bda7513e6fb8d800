"""Periodic-torus discretization: transforms, derivatives, dealiasing, Leray projection.

Conventions used throughout the package:

* Arrays carry their spatial axes LAST.  A scalar field has shape ``dims``;
  a vector field ``(3, *dims)``; a rank-2 tensor field ``(3, 3, *dims)``.
  Anything in front of the component axes is treated as a batch.
* Vector and tensor fields always have 3 components, even on a 2D grid: the
  derivative along the missing axis is identically zero.  This keeps the
  frame and stress algebra dimension-agnostic.
* ``gradient(w)[a]`` is the derivative along axis ``a``, so for a vector
  field ``grad[a, c] = d_a w_c`` (derivative index first).
* Spectral first derivatives zero the Nyquist mode, which makes every
  odd-order operator an exactly antisymmetric matrix on the lattice; the
  Laplacian is defined as the composition of those first derivatives.
  Discrete integration by parts is then exact, which the variational
  consistency of the elastic module relies on.
* ``laplacian_power`` applies the multiplier ``(-|k|^2)**s``; float64
  round-off makes powers beyond s = 3 unreliable, so diagnostics cap s there.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import GridMismatch, NonFiniteField


class Grid:
    """Uniform periodic lattice with cached spectral machinery.

    Parameters
    ----------
    dims : tuple of 2 or 3 ints, points per axis (even, >= 16)
    lengths : box lengths per axis (default 2*pi each)
    dealias_fraction : fraction of the Nyquist band kept in products (2/3 rule)
    """

    def __init__(self, dims, lengths=None, dealias_fraction=2.0 / 3.0):
        dims = tuple(int(n) for n in dims)
        if len(dims) not in (2, 3):
            raise ValueError("grid must be 2D or 3D")
        for n in dims:
            if n < 16 or n % 2 != 0:
                raise ValueError("grid axes must be even and >= 16 points")
        self.dims = dims
        self.ndim = len(dims)
        if lengths is None:
            lengths = (2.0 * np.pi,) * self.ndim
        self.lengths = tuple(float(L) for L in lengths)
        if len(self.lengths) != self.ndim or min(self.lengths) <= 0.0:
            raise ValueError("need one positive box length per axis")
        self.dealias_fraction = float(dealias_fraction)

        self.n_total = int(np.prod(dims))
        self.volume = float(np.prod(self.lengths))
        self.dV = self.volume / self.n_total
        self.dx = tuple(L / n for L, n in zip(self.lengths, dims))

        self._axes = tuple(range(-self.ndim, 0))
        self._hat_dims = dims[:-1] + (dims[-1] // 2 + 1,)

        # Integer mode numbers per axis, shaped to broadcast over hat arrays.
        kint = []
        for a, n in enumerate(dims):
            if a == self.ndim - 1:
                m = np.arange(n // 2 + 1, dtype=np.int64)
            else:
                m = np.concatenate([np.arange(0, n // 2, dtype=np.int64),
                                    np.arange(-(n // 2), 0, dtype=np.int64)])
            shape = [1] * self.ndim
            shape[a] = m.size
            kint.append(m.reshape(shape))
        self._kint = kint

        # Physical wavenumbers with the Nyquist mode zeroed (odd operators
        # must be antisymmetric; the Nyquist derivative has no sign).
        self._k = []
        for a, n in enumerate(dims):
            k = self._kint[a] * (2.0 * np.pi / self.lengths[a])
            k = np.where(np.abs(self._kint[a]) == n // 2, 0.0, k)
            self._k.append(k)
        self.k_squared = sum(k * k for k in self._k)
        self._k2_safe = np.where(self.k_squared == 0.0, 1.0, self.k_squared)

        cut = [self.dealias_fraction * (n / 2.0) for n in dims]
        mask = np.ones((1,) * self.ndim, dtype=bool)
        for a in range(self.ndim):
            mask = mask & (np.abs(self._kint[a]) < cut[a])
        self.dealias_mask = mask

        # Parseval weights: rfft stores only half the modes of the last axis.
        w = np.ones(self._hat_dims[-1])
        w[1:] = 2.0
        if dims[-1] % 2 == 0:
            w[-1] = 1.0
        self._parseval_w = w.reshape((1,) * (self.ndim - 1) + (w.size,))

    # -- transforms -------------------------------------------------------

    def fft(self, arr):
        return np.fft.rfftn(arr, axes=self._axes)

    def ifft(self, hat):
        return np.fft.irfftn(hat, s=self.dims, axes=self._axes)

    # -- shape / sanity checks --------------------------------------------

    def check(self, arr, comp_shape=()):
        expect = tuple(comp_shape) + self.dims
        if arr.shape != expect:
            raise GridMismatch(f"field shape {arr.shape}, expected {expect}")
        return arr

    def ensure_finite(self, arr):
        if not np.isfinite(arr).all():
            raise NonFiniteField("field contains NaN or Inf")
        return arr

    def _check_spatial(self, arr):
        if arr.shape[-self.ndim:] != self.dims:
            raise GridMismatch(
                f"field trailing shape {arr.shape[-self.ndim:]}, expected {self.dims}")

    # -- differential operators --------------------------------------------

    def gradient(self, arr):
        """All three spatial derivatives of ``arr``: shape (3, *arr.shape).

        Components beyond the grid dimension are zero.
        """
        self._check_spatial(arr)
        self.ensure_finite(arr)
        hat = self.fft(arr)
        out = np.empty((3,) + arr.shape)
        for a in range(self.ndim):
            out[a] = self.ifft(1j * self._k[a] * hat)
        if self.ndim == 2:
            out[2] = 0.0
        return out

    def _ik(self, a):
        """i*k multiplier for axis a (0 beyond the grid dimension)."""
        if a < self.ndim:
            return 1j * self._k[a]
        return 0.0

    def divergence(self, w):
        """d_a w_a for a vector field w of shape (..., 3, *dims)."""
        self._check_spatial(w)
        self.ensure_finite(w)
        hat = self.fft(w)
        comp = lambda c: np.take(hat, c, axis=-self.ndim - 1)
        d = self._ik(0) * comp(0) + self._ik(1) * comp(1)
        if self.ndim == 3:
            d = d + self._ik(2) * comp(2)
        return self.ifft(d)

    def curl(self, w):
        """Curl of a 3-component vector field, shape preserved."""
        self._check_spatial(w)
        self.ensure_finite(w)
        hat = self.fft(w)
        ax = -self.ndim - 1
        w0, w1, w2 = (np.take(hat, c, axis=ax) for c in range(3))
        ik = [self._ik(a) for a in range(3)]
        c0 = ik[1] * w2 - ik[2] * w1
        c1 = ik[2] * w0 - ik[0] * w2
        c2 = ik[0] * w1 - ik[1] * w0
        return self.ifft(np.stack([c0, c1, c2], axis=ax))

    def laplacian(self, arr):
        self._check_spatial(arr)
        self.ensure_finite(arr)
        return self.ifft(-self.k_squared * self.fft(arr))

    def laplacian_power(self, arr, s):
        """Apply the Laplacian s times via the multiplier (-|k|^2)**s."""
        s = int(s)
        if s < 0:
            raise ValueError("s must be a nonnegative integer")
        if s == 0:
            return np.array(arr, copy=True)
        self._check_spatial(arr)
        self.ensure_finite(arr)
        return self.ifft((-self.k_squared) ** s * self.fft(arr))

    def grad_div(self, w):
        """grad(div w) for a vector field (..., 3, *dims)."""
        self._check_spatial(w)
        self.ensure_finite(w)
        hat = self.fft(w)
        ax = -self.ndim - 1
        d = sum(self._ik(a) * np.take(hat, a, axis=ax) for a in range(self.ndim))
        out = [self._ik(a) * d for a in range(3)]
        if self.ndim == 2:
            out[2] = np.zeros_like(d)
        return self.ifft(np.stack(out, axis=ax))

    def div_tensor(self, T):
        """(div T)_i = d_j T[i, j] for a tensor field (..., 3, 3, *dims)."""
        self._check_spatial(T)
        self.ensure_finite(T)
        hat = self.fft(T)
        axj = -self.ndim - 1
        d = sum(self._ik(j) * np.take(hat, j, axis=axj) for j in range(self.ndim))
        return self.ifft(d)

    # -- projection & dealiasing -------------------------------------------

    def leray_project(self, v):
        """L2-orthogonal projection onto divergence-free fields.

        The k = 0 (mean) mode is untouched; the gradient part is removed
        mode by mode.  Idempotent and self-adjoint by construction.
        """
        self._check_spatial(v)
        self.ensure_finite(v)
        hat = self.fft(v)
        ax = -self.ndim - 1
        kdotv = sum(self._k[a] * np.take(hat, a, axis=ax) for a in range(self.ndim))
        kdotv = kdotv / self._k2_safe
        comps = []
        for a in range(3):
            va = np.take(hat, a, axis=ax)
            if a < self.ndim:
                va = va - self._k[a] * kdotv
            comps.append(va)
        return self.ifft(np.stack(comps, axis=ax))

    def dealias(self, arr):
        """2/3-rule mask, to be applied to pointwise products."""
        self._check_spatial(arr)
        return self.ifft(self.dealias_mask * self.fft(arr))

    # -- quadrature and norms ------------------------------------------------

    def integrate(self, f):
        """Torus integral of a scalar field (batch axes are preserved)."""
        self._check_spatial(f)
        out = f.sum(axis=self._axes) * self.dV
        return float(out) if np.ndim(out) == 0 else out

    def l2_norm_sq(self, arr):
        """Integral of the squared field, all component axes summed."""
        return float(np.vdot(arr, arr).real) * self.dV

    def l2_norm(self, arr):
        return np.sqrt(self.l2_norm_sq(arr))

    def max_abs(self, arr):
        return float(np.max(np.abs(arr)))

    def spectral_norm_sq(self, arr, multiplier=None):
        """Same integral as ``l2_norm_sq`` evaluated via Parseval.

        ``multiplier``, if given, is a real hat-shaped weight (a function of
        k^2) applied under the sum; used for Sobolev norms.
        """
        hat = self.fft(arr)
        w = self._parseval_w if multiplier is None else self._parseval_w * multiplier
        total = float(np.sum(w * (hat.real ** 2 + hat.imag ** 2)))
        return total * self.volume / self.n_total ** 2

    def sobolev_norm_sq(self, arr, order):
        """Squared H^order norm via the multiplier (1 + |k|^2)**order."""
        return self.spectral_norm_sq(arr, (1.0 + self.k_squared) ** order)

    def _coarse_fine_slices(self, fine):
        """Per-axis (coarse, fine) slice pairs for spectral padding/truncation.

        Nyquist modes of the coarse grid are dropped: the mapping is exact
        for fields with no Nyquist content (all band-limited fields here).
        """
        pairs = []
        for a, (nc, nf) in enumerate(zip(self.dims, fine.dims)):
            if a == self.ndim - 1:
                pairs.append([(slice(0, nc // 2), slice(0, nc // 2))])
            else:
                pairs.append([(slice(0, nc // 2), slice(0, nc // 2)),
                              (slice(nc // 2 + 1, nc), slice(nf - nc // 2 + 1, nf))])
        return pairs

    def refine_to(self, fine, arr):
        """Spectral interpolation of ``arr`` onto a finer grid (zero padding)."""
        hat = self.fft(arr) * (fine.n_total / self.n_total)
        out = np.zeros(arr.shape[:-self.ndim] + fine._hat_dims, dtype=complex)
        batch = (slice(None),) * (arr.ndim - self.ndim)

        for combo in itertools.product(*self._coarse_fine_slices(fine)):
            src = batch + tuple(c for c, _ in combo)
            dst = batch + tuple(f for _, f in combo)
            out[dst] = hat[src]
        return fine.ifft(out)

    def restrict_from(self, fine, arr):
        """Spectral truncation of a fine-grid field back onto this grid."""
        hat = fine.fft(arr) * (self.n_total / fine.n_total)
        out = np.zeros(arr.shape[:-self.ndim] + self._hat_dims, dtype=complex)
        batch = (slice(None),) * (arr.ndim - self.ndim)

        for combo in itertools.product(*self._coarse_fine_slices(fine)):
            src = batch + tuple(f for _, f in combo)
            dst = batch + tuple(c for c, _ in combo)
            out[dst] = hat[src]
        return self.ifft(out)

    def mesh(self):
        """Coordinate arrays, shape (ndim, *dims)."""
        axes = [np.arange(n) * (L / n) for n, L in zip(self.dims, self.lengths)]
        return np.stack(np.meshgrid(*axes, indexing="ij"))


class FiniteDifferenceBackend:
    """4th-order periodic central differences with the same operator surface.

    Drop-in replacement for the spectral backend in the elastic module (it
    provides the differential operators only, no transforms or projection).
    The Laplacian and all composite operators are built by composing the
    first-derivative stencil with itself, so discrete integration by parts
    stays exact, matching the spectral backend's variational property.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        self.dims = grid.dims
        self.ndim = grid.ndim
        self.lengths = grid.lengths
        self.dV = grid.dV
        self.dx = grid.dx

    def check(self, arr, comp_shape=()):
        return self.grid.check(arr, comp_shape)

    def ensure_finite(self, arr):
        return self.grid.ensure_finite(arr)

    def _d1(self, arr, a):
        if a >= self.ndim:
            return np.zeros_like(arr)
        ax = arr.ndim - self.ndim + a
        h = self.dx[a]
        p1 = np.roll(arr, -1, axis=ax)
        m1 = np.roll(arr, 1, axis=ax)
        p2 = np.roll(arr, -2, axis=ax)
        m2 = np.roll(arr, 2, axis=ax)
        return (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h)

    def gradient(self, arr):
        return np.stack([self._d1(arr, a) for a in range(3)])

    def divergence(self, w):
        ax = w.ndim - self.ndim - 1
        return sum(self._d1(np.take(w, a, axis=ax), a) for a in range(self.ndim))

    def curl(self, w):
        ax = w.ndim - self.ndim - 1
        w0, w1, w2 = (np.take(w, c, axis=ax) for c in range(3))
        c0 = self._d1(w2, 1) - self._d1(w1, 2)
        c1 = self._d1(w0, 2) - self._d1(w2, 0)
        c2 = self._d1(w1, 0) - self._d1(w0, 1)
        return np.stack([c0, c1, c2], axis=ax)

    def laplacian(self, arr):
        return sum(self._d1(self._d1(arr, a), a) for a in range(self.ndim))

    def grad_div(self, w):
        return self.gradient(self.divergence(w))

    def div_tensor(self, T):
        axj = T.ndim - self.ndim - 1
        return sum(self._d1(np.take(T, j, axis=axj), j) for j in range(self.ndim))

    def integrate(self, f):
        return self.grid.integrate(f)

    def l2_norm_sq(self, arr):
        return self.grid.l2_norm_sq(arr)

    def l2_norm(self, arr):
        return self.grid.l2_norm(arr)
