"""Compressive measurement of a TFD through its ambiguity function.

The measurement keeps a centered d_nu x d_tau rectangle of the ambiguity
function.  Because the AF is a unitary transform of the (real) TFD, the
resulting operator has exactly orthonormal rows; the matrix-free forward and
adjoint below never materialize the M x N^2 matrix.  ``dense_oracle`` builds
that matrix explicitly from the DFT Kronecker product for small grids and is
used by the tests as the independent reference.

The vector API (``forward``/``adjoint``) works on column-major vectorized
TFDs.  The ``*_mat`` variants are the same maps on N x N matrices with the
permutation copies (centering shift, Doppler/lag transpose, column-major
flatten) folded into precomputed index lookups; they produce bitwise
identical values and carry the hot loops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

__all__ = ["MaskSpec", "MeasurementOp", "RfftGradKernel", "apply_mask", "dense_oracle"]


@dataclass(frozen=True)
class MaskSpec:
    """Centered sampling rectangle in the ambiguity plane (both dims odd)."""

    d_nu: int
    d_tau: int

    def __post_init__(self):
        for name, d in (("d_nu", self.d_nu), ("d_tau", self.d_tau)):
            if d < 1 or d % 2 == 0:
                raise ValueError(f"{name} must be a positive odd integer, got {d}")

    @property
    def m(self) -> int:
        return self.d_nu * self.d_tau

    def slices(self, n: int) -> tuple[slice, slice]:
        if self.d_nu > n or self.d_tau > n:
            raise ValueError(f"mask {self.d_nu}x{self.d_tau} does not fit in a {n}x{n} grid")
        r0 = n // 2 - (self.d_nu - 1) // 2
        c0 = n // 2 - (self.d_tau - 1) // 2
        return slice(r0, r0 + self.d_nu), slice(c0, c0 + self.d_tau)


def apply_mask(af: np.ndarray, mask: MaskSpec) -> np.ndarray:
    """Extract the centered mask block of a centered AF, column-major."""
    af = np.asarray(af)
    rows, cols = mask.slices(af.shape[0])
    return af[rows, cols].flatten(order="F")


class MeasurementOp:
    """Matrix-free masked unitary 2D DFT acting on vectorized real TFDs.

    ``forward`` maps a real N^2 vector to the complex M-vector of AF samples
    inside the mask; ``adjoint`` is its exact adjoint under the real-part
    pairing (the solution space is restricted to real vectors, so the adjoint
    ends with a real-part projection).  ``adjoint_complex`` omits that
    projection and is the exact right inverse of ``forward``.

    Instances are immutable after construction and safe to share across
    threads; no call mutates shared state.
    """

    def __init__(self, n: int, mask: MaskSpec):
        if n < 2 or n % 2:
            raise ValueError(f"grid size must be even and >= 2, got {n}")
        rows, cols = mask.slices(n)
        self.n = n
        self.mask = mask
        # unshifted fft2 indices of the centered block: the centered AF entry
        # (nu_s, tau_s) is fft2(W)[(tau_s + N/2) % N, (nu_s + N/2) % N] / N
        nu_unsh = (np.arange(rows.start, rows.stop) + n // 2) % n
        tau_unsh = (np.arange(cols.start, cols.stop) + n // 2) % n
        self._ix = np.ix_(tau_unsh, nu_unsh)

    @property
    def m(self) -> int:
        return self.mask.m

    # -- matrix fast paths --------------------------------------------------

    def forward_mat(self, w: np.ndarray) -> np.ndarray:
        """W (N x N real) -> centered AF block (d_nu x d_tau complex)."""
        return np.fft.fft2(w)[self._ix].T / self.n

    def adjoint_mat(self, block: np.ndarray) -> np.ndarray:
        """Centered AF block -> N x N real matrix (adjoint incl. real part)."""
        return self._embed_invert_mat(block).real

    def _embed_invert_mat(self, block: np.ndarray) -> np.ndarray:
        z = np.zeros((self.n, self.n), dtype=complex)
        z[self._ix] = block.T
        return np.fft.ifft2(z) * self.n

    def gradient_step_mat(self, w: np.ndarray, a_block: np.ndarray) -> np.ndarray:
        """Re adjoint(forward(W) - a'), all in matrix form."""
        return self.adjoint_mat(self.forward_mat(w) - a_block)

    def block_from_vec(self, y: np.ndarray) -> np.ndarray:
        return self._check_y(y).reshape((self.mask.d_nu, self.mask.d_tau), order="F")

    # -- vector API ----------------------------------------------------------

    def _check_omega(self, omega: np.ndarray) -> np.ndarray:
        omega = np.asarray(omega)
        if omega.shape != (self.n * self.n,):
            raise ValueError(f"expected omega of length {self.n * self.n}, got shape {omega.shape}")
        return omega

    def _check_y(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=complex)
        if y.shape != (self.m,):
            raise ValueError(f"expected measurement vector of length {self.m}, got shape {y.shape}")
        return y

    def forward(self, omega: np.ndarray) -> np.ndarray:
        omega = self._check_omega(omega)
        w = omega.reshape((self.n, self.n), order="F")
        return self.forward_mat(w).flatten(order="F")

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        return self.adjoint_mat(self.block_from_vec(y)).flatten(order="F")

    def adjoint_complex(self, y: np.ndarray) -> np.ndarray:
        """Adjoint without the real-part projection (test/diagnostic use)."""
        return self._embed_invert_mat(self.block_from_vec(y)).flatten(order="F")


class RfftGradKernel:
    """Half-spectrum gradient step for iterative solvers.

    Computes Re adjoint(forward(W) - a') using rfft2/irfft2 on the real
    iterate: the full spectrum values outside the half range are recovered
    through Hermitian symmetry, and the adjoint's real-part projection
    becomes an explicit Hermitianization of the residual block.  Equal to
    ``MeasurementOp.gradient_step_mat`` up to fp rounding, at roughly a third
    of the cost; supports float32 for Monte-Carlo workloads.
    """

    def __init__(self, op: MeasurementOp, dtype=np.float64):
        n = op.n
        h = n // 2 + 1
        mask = op.mask
        rows_s, cols_s = mask.slices(n)
        nu = (np.arange(rows_s.start, rows_s.stop) + n // 2) % n
        tau = (np.arange(cols_s.start, cols_s.stop) + n // 2) % n
        self.op = op
        self.n = n
        self.dtype = np.dtype(dtype)
        self.cdtype = np.complex64 if self.dtype == np.float32 else np.complex128
        self._h = h
        # the centered mask only touches Doppler columns 0..hq-1 of the half
        # spectrum (plus their Hermitian reflections, which land in the same
        # columns), so the column-axis transforms run on hq columns only
        self._dir_i = np.where(nu < h)[0]
        self._ref_i = np.where(nu >= h)[0]
        self._hq = int(nu[self._dir_i].max()) + 1
        self._tau = tau
        self._ix_dir = np.ix_(tau, nu[self._dir_i])
        self._ix_ref = np.ix_((n - tau) % n, (n - nu[self._ref_i]) % n)
        # adjoint: Hermitianized residual block on the half-spectrum support
        i_of = {int(q): i for i, q in enumerate(nu)}
        j_of = {int(p): j for j, p in enumerate(tau)}
        qgrid = nu[self._dir_i]
        d_tau = mask.d_tau
        hcols = qgrid.size
        self._qgrid = qgrid
        self._i1 = np.empty((d_tau, hcols), dtype=int)
        self._j2 = np.empty((d_tau, hcols), dtype=int)
        self._i2 = np.empty((d_tau, hcols), dtype=int)
        for jj, p in enumerate(tau):
            self._j2[jj, :] = j_of[int((n - p) % n)]
            for cc, q in enumerate(qgrid):
                self._i1[jj, cc] = i_of[int(q)]
                self._i2[jj, cc] = i_of[int((n - q) % n)]
        self._j1 = np.broadcast_to(np.arange(d_tau)[:, None], (d_tau, hcols))

    def forward_block(self, w: np.ndarray) -> np.ndarray:
        f = sfft.fft(sfft.rfft(w, axis=1)[:, : self._hq], axis=0)
        block = np.empty((self.op.mask.d_nu, self.op.mask.d_tau), dtype=self.cdtype)
        block[self._dir_i] = f[self._ix_dir].T
        block[self._ref_i] = np.conj(f[self._ix_ref]).T
        block /= self.n
        return block

    def adjoint_block(self, block: np.ndarray) -> np.ndarray:
        v = 0.5 * (block[self._i1, self._j1] + np.conj(block[self._i2, self._j2]))
        zc = np.zeros((self.n, self._hq), dtype=self.cdtype)
        zc[self._tau, :] = v
        zh = np.zeros((self.n, self._h), dtype=self.cdtype)
        zh[:, : self._hq] = sfft.ifft(zc, axis=0)
        return sfft.irfft(zh, n=self.n, axis=1, overwrite_x=True) * self.n

    def grad(self, w: np.ndarray, a_block: np.ndarray) -> np.ndarray:
        """Re adjoint(forward(W) - a_block)."""
        return self.adjoint_block(self.forward_block(w) - a_block)


def dense_oracle(n: int, mask: MaskSpec) -> np.ndarray:
    """Explicit M x N^2 measurement matrix, built from kron(D, D).

    D is the unitary DFT matrix.  kron(D, D) maps the column-major TFD vector
    to the column-major ambiguity matrix before the Doppler/lag transpose and
    the centering shift; both are realized here purely by row selection, with
    the same ordering as the matrix-free operator.  Reference implementation
    for tests; refuses grids above 16.
    """
    if n > 16:
        raise ValueError(f"dense oracle limited to n <= 16, got {n}")
    mask.slices(n)
    idx = np.arange(n)
    d = np.exp(-2j * np.pi * np.outer(idx, idx) / n) / np.sqrt(n)
    psi_full = np.kron(d, d)
    rows_s, cols_s = mask.slices(n)
    out_rows = []
    for tau_s in range(cols_s.start, cols_s.stop):  # column-major over the block
        i_tau = (tau_s + n // 2) % n
        for nu_s in range(rows_s.start, rows_s.stop):
            j_nu = (nu_s + n // 2) % n
            out_rows.append(i_tau + j_nu * n)
    return psi_full[out_rows, :]
