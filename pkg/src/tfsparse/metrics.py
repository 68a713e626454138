"""Reconstruction quality metrics."""

from __future__ import annotations

import numpy as np

__all__ = ["nmse_db", "max_normalize"]


def nmse_db(estimate: np.ndarray, reference: np.ndarray) -> float:
    """10 log10(||ref - est||^2 / ||ref||^2); -inf for a perfect match.

    Lower is better.  Raises on an all-zero reference.
    """
    estimate = np.asarray(estimate, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if estimate.shape != reference.shape:
        raise ValueError(f"shape mismatch: {estimate.shape} vs {reference.shape}")
    ref_energy = float(np.sum(reference**2))
    if ref_energy == 0.0:
        raise ValueError("reference has zero energy")
    err = float(np.sum((reference - estimate) ** 2))
    if err == 0.0:
        return -np.inf
    return 10.0 * np.log10(err / ref_energy)


def max_normalize(mat: np.ndarray) -> np.ndarray:
    """Divide by max-abs (no-op for an all-zero matrix).

    Applied to both estimate and reference before cross-method NMSE
    comparisons, since quadratic transforms and sparse solvers produce
    incommensurate global scales.
    """
    mat = np.asarray(mat, dtype=float)
    peak = np.abs(mat).max()
    return mat / peak if peak > 0 else mat
