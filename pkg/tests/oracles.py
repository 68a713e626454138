"""Independent reference implementations used only by tests."""

from __future__ import annotations

import numpy as np


def coordinate_descent_lasso(psi: np.ndarray, a: np.ndarray, lam: float,
                             sweeps: int = 4000, tol: float = 1e-13) -> np.ndarray:
    """Cyclic coordinate descent on 0.5||a - psi w||^2 + lam ||w||_1, w real.

    Dense, slow, and entirely independent of the iterative solvers: the only
    shared ingredient is the explicit measurement matrix.
    """
    m, n2 = psi.shape
    col_norm2 = (np.abs(psi) ** 2).sum(axis=0)
    w = np.zeros(n2)
    r = a.astype(complex).copy()
    for _ in range(sweeps):
        delta_max = 0.0
        for i in range(n2):
            ci = col_norm2[i]
            if ci == 0.0:
                continue
            rho = ci * w[i] + float((psi[:, i].conj() @ r).real)
            wi = np.sign(rho) * max(abs(rho) - lam, 0.0) / ci
            d = wi - w[i]
            if d != 0.0:
                r -= psi[:, i] * d
                w[i] = wi
                delta_max = max(delta_max, abs(d))
        if delta_max < tol:
            break
    return w


def dense_kkt_residual(psi: np.ndarray, a: np.ndarray, lam: float, w: np.ndarray) -> float:
    """LASSO optimality violation computed from the dense matrix."""
    g = (psi.conj().T @ (psi @ w - a)).real
    on = w != 0
    res = 0.0
    if on.any():
        res = max(res, float(np.abs(g[on] + lam * np.sign(w[on])).max()))
    if (~on).any():
        res = max(res, float(np.maximum(np.abs(g[~on]) - lam, 0.0).max()))
    return res


def random_lasso_observation(op, rng: np.random.Generator, sparsity: int = 6,
                             noise: float = 0.01) -> np.ndarray:
    """Observation from a random sparse nonnegative ground truth plus noise."""
    n2 = op.n * op.n
    w_true = np.zeros(n2)
    support = rng.choice(n2, size=sparsity, replace=False)
    w_true[support] = rng.uniform(0.5, 2.0, size=sparsity)
    a = op.forward(w_true)
    a = a + noise * (rng.standard_normal(op.m) + 1j * rng.standard_normal(op.m))
    return a
