"""Discrete Wigner-Ville distribution and ambiguity function.

Conventions (everything downstream relies on these):

* Signals are length-N complex analytic arrays, N even.
* The WVD is real N x N; row m is frequency bin m <-> m/(2N) cycles/sample
  (integer-lag realization, so the frequency axis is compressed to [0, 0.5)),
  column n is time.  The lag product z[n+k] z*[n-k] uses zero padding outside
  [0, N-1], and the lag DFT is unnormalized, so sum_m W[m, n] = N |z[n]|^2.
* The ambiguity function is the unitary 2D DFT of the WVD (1/N total scale),
  transposed so axis 0 is Doppler (transform of time) and axis 1 is lag, then
  origin-centered with the origin at index (N//2, N//2).  The origin value
  equals sum_n |z[n]|^2 exactly.
"""

from __future__ import annotations

import json
import warnings
from pathlib import Path

import numpy as np

__all__ = [
    "wvd",
    "af_from_wvd",
    "wvd_from_af",
    "af_direct",
    "analytic_signal",
    "negative_band_fraction",
    "save_matrix",
    "load_matrix",
]

CONVENTION_TAG = "unitary-centered-v1"

# fp slack for "this matrix is real" assertions
_IMAG_RESIDUE_TOL = 1e-9


def analytic_signal(x: np.ndarray) -> np.ndarray:
    """Discrete analytic associate of a real signal.

    Zeroes the negative-frequency FFT bins, doubles the strictly positive
    ones, keeps DC and Nyquist untouched.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n % 2:
        raise ValueError("analytic_signal requires even length")
    spec = np.fft.fft(x)
    spec[1 : n // 2] *= 2.0
    spec[n // 2 + 1 :] = 0.0
    return np.fft.ifft(spec)


def negative_band_fraction(z: np.ndarray) -> float:
    """Fraction of signal energy in the negative-frequency FFT bins."""
    z = np.asarray(z, dtype=complex)
    n = z.size
    spec = np.abs(np.fft.fft(z)) ** 2
    total = spec.sum()
    if total == 0.0:
        return 0.0
    return float(spec[n // 2 + 1 :].sum() / total)


def _lag_products(z: np.ndarray) -> np.ndarray:
    """K[n, k mod N] = z[n+k] z*[n-k], zero outside [0, N-1].

    Rows are time n, columns are the wrapped lag index; k runs over
    [-N/2, N/2 - 1].  The k = -N/2 column is identically zero under zero
    padding, which is what makes the lag DFT exactly real.
    """
    z = np.asarray(z, dtype=complex)
    n = z.size
    ks = np.arange(-(n // 2), n // 2)
    nn = np.arange(n)[:, None]
    ip = nn + ks[None, :]
    im = nn - ks[None, :]
    valid = (ip >= 0) & (ip < n) & (im >= 0) & (im < n)
    prod = np.where(valid, z[np.clip(ip, 0, n - 1)] * np.conj(z[np.clip(im, 0, n - 1)]), 0.0)
    k_mat = np.zeros((n, n), dtype=complex)
    k_mat[:, ks % n] = prod
    return k_mat


def wvd(z: np.ndarray) -> np.ndarray:
    """Wigner-Ville distribution of an analytic signal.

    W[m, n] = Re sum_k z[n+k] z*[n-k] exp(-2j pi k m / N).  The imaginary
    residue is asserted to be at fp noise level and then dropped.  Input
    with more than 1% of its energy in the negative band triggers a
    warning (the compressed frequency axis then aliases).
    """
    z = np.asarray(z, dtype=complex)
    n = z.size
    if n % 2:
        raise ValueError("wvd requires even length")
    if negative_band_fraction(z) > 0.01:
        warnings.warn(
            "input is not analytic (negative-band energy > 1%); the WVD frequency axis will alias",
            stacklevel=2,
        )
    k_mat = _lag_products(z)
    w = np.fft.fft(k_mat, axis=1).T
    peak = np.abs(w).max()
    if peak > 0:
        residue = np.abs(w.imag).max()
        assert residue <= _IMAG_RESIDUE_TOL * peak, (
            f"WVD imaginary residue {residue:.3e} exceeds {_IMAG_RESIDUE_TOL:.1e} * max |W|"
        )
    return np.ascontiguousarray(w.real)


def af_from_wvd(w: np.ndarray) -> np.ndarray:
    """Centered ambiguity function from a WVD matrix (unitary 2D DFT)."""
    w = np.asarray(w)
    n = w.shape[0]
    if w.shape != (n, n):
        raise ValueError(f"expected square matrix, got {w.shape}")
    return np.fft.fftshift(np.fft.fft2(w).T) / n


def wvd_from_af(a: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`af_from_wvd` (adjoint of a unitary map)."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    w = np.fft.ifft2(np.fft.ifftshift(a).T) * n
    peak = np.abs(w).max()
    if peak > 0:
        residue = np.abs(w.imag).max()
        if residue > _IMAG_RESIDUE_TOL * peak:
            warnings.warn("inverse AF has a non-trivial imaginary part; input was not a valid AF of a real TFD", stacklevel=2)
    return w.real


def af_direct(z: np.ndarray) -> np.ndarray:
    """Ambiguity function computed from the lag products, skipping the WVD.

    One N-point FFT per lag instead of the lag DFT plus a full 2D DFT;
    agrees with ``af_from_wvd(wvd(z))`` to fp precision.
    """
    z = np.asarray(z, dtype=complex)
    n = z.size
    if n % 2:
        raise ValueError("af_direct requires even length")
    k_mat = _lag_products(z)
    # F[q, ktilde] = sum_n K[n, ktilde] exp(-2j pi q n / N); the lag axis of
    # the centered AF is the column permutation p -> (-p) mod N of F.
    f_q = np.fft.fft(k_mat, axis=0)
    a_raw = f_q[:, (n - np.arange(n)) % n]
    return np.fft.fftshift(a_raw)


def save_matrix(path: str | Path, data: np.ndarray, kind: str) -> None:
    """Raw little-endian float32 dump with a JSON sidecar.

    Real matrices are written as plain float32, complex ones as interleaved
    re/im pairs; both column-major.  The sidecar is ``<path>.json``.
    """
    path = Path(path)
    data = np.asarray(data)
    n = data.shape[0]
    if data.shape != (n, n):
        raise ValueError(f"expected square matrix, got {data.shape}")
    flat = data.flatten(order="F")
    if np.iscomplexobj(data):
        buf = np.empty(2 * flat.size, dtype="<f4")
        buf[0::2] = flat.real
        buf[1::2] = flat.imag
        complex_flag = True
    else:
        buf = flat.astype("<f4")
        complex_flag = False
    path.write_bytes(buf.tobytes())
    sidecar = {"N": int(n), "kind": kind, "complex": complex_flag, "convention": CONVENTION_TAG}
    Path(str(path) + ".json").write_text(json.dumps(sidecar, sort_keys=True) + "\n")


def load_matrix(path: str | Path) -> tuple[np.ndarray, dict]:
    """Load a matrix written by :func:`save_matrix`; returns (data, sidecar)."""
    path = Path(path)
    sidecar = json.loads(Path(str(path) + ".json").read_text())
    n = int(sidecar["N"])
    raw = np.frombuffer(path.read_bytes(), dtype="<f4")
    if sidecar.get("complex", False):
        if raw.size != 2 * n * n:
            raise ValueError(f"expected {2 * n * n} float32 values, found {raw.size}")
        flat = raw[0::2].astype(float) + 1j * raw[1::2].astype(float)
    else:
        if raw.size != n * n:
            raise ValueError(f"expected {n * n} float32 values, found {raw.size}")
        flat = raw.astype(float)
    return flat.reshape((n, n), order="F"), sidecar
