"""Classical LASSO solvers for masked-AF measurements.

Minimizes F(w) = 0.5 ||a' - Psi' w||^2 + lambda ||w||_1 over real w by
proximal gradient descent (ISTA), optionally Nesterov-accelerated (FISTA)
with gradient-based adaptive restart.  The measurement rows are orthonormal,
so the gradient Lipschitz constant is exactly 1 and the default step is 1.

The iterates live as N x N matrices internally (the operator's matrix fast
paths are bitwise identical to the vectorized definition); the public API
speaks column-major vectors.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .measure import MaskSpec, MeasurementOp, RfftGradKernel, apply_mask
from .tfcore import af_direct

__all__ = [
    "LassoProblem",
    "SolverConfig",
    "SolverDiverged",
    "SolveTrace",
    "soft_threshold",
    "ista_solve",
    "lasso_objective",
    "kkt_residual",
    "default_lambda",
    "l1app_reconstruct",
    "write_trace_csv",
    "L1APP_MASK",
]

L1APP_MASK = MaskSpec(13, 13)


class SolverDiverged(RuntimeError):
    """Objective increased for several consecutive iterations with step <= 1.

    With orthonormal measurement rows this cannot happen for a correct
    forward/adjoint pair, so it almost always indicates an operator bug.
    """


@dataclass
class LassoProblem:
    op: MeasurementOp
    a_prime: np.ndarray
    lam: float

    def __post_init__(self):
        self.a_prime = np.asarray(self.a_prime, dtype=complex)
        if self.a_prime.shape != (self.op.m,):
            raise ValueError(f"expected observation of length {self.op.m}, got {self.a_prime.shape}")
        if not np.all(np.isfinite(self.a_prime.view(float))):
            raise ValueError("observation contains non-finite values")
        if not (self.lam > 0):
            raise ValueError(f"lambda must be > 0, got {self.lam}")


@dataclass
class SolverConfig:
    max_iters: int = 2000
    tol: float = 1e-6
    step: float = 1.0
    acceleration: str = "ista"  # "ista" | "fista"
    nonneg: bool = False
    trace: bool = True
    precision: str = "double"  # "double" | "single" (fast Monte-Carlo path)

    def __post_init__(self):
        if not (0.0 < self.step <= 1.0):
            raise ValueError(f"step must be in (0, 1], got {self.step}")
        if self.acceleration not in ("ista", "fista"):
            raise ValueError(f"unknown acceleration {self.acceleration!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.precision not in ("double", "single"):
            raise ValueError(f"unknown precision {self.precision!r}")


@dataclass
class SolveTrace:
    """Per-iteration record (iter, objective, nnz, rel_change)."""

    iters: list[int] = field(default_factory=list)
    objective: list[float] = field(default_factory=list)
    nnz: list[int] = field(default_factory=list)
    rel_change: list[float] = field(default_factory=list)

    def append(self, k: int, obj: float, nnz: int, rel: float) -> None:
        self.iters.append(k)
        self.objective.append(obj)
        self.nnz.append(nnz)
        self.rel_change.append(rel)


def write_trace_csv(trace: SolveTrace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "objective", "nnz", "rel_change"])
        for row in zip(trace.iters, trace.objective, trace.nnz, trace.rel_change):
            writer.writerow([row[0], f"{row[1]:.12e}", row[2], f"{row[3]:.6e}"])


def soft_threshold(x: np.ndarray, theta) -> np.ndarray:
    """sgn(x) * max(|x| - theta, 0); theta scalar or elementwise, >= 0.

    Preserves the input float dtype.
    """
    theta_arr = np.asarray(theta)
    if np.any(theta_arr < 0):
        raise ValueError("threshold must be nonnegative")
    x = np.asarray(x)
    return np.sign(x) * np.maximum(np.abs(x) - theta, 0.0)


def _objective_mat(op: MeasurementOp, w: np.ndarray, a_block: np.ndarray, lam: float) -> float:
    r = op.forward_mat(w) - a_block
    return 0.5 * float(np.vdot(r, r).real) + lam * float(np.abs(w).sum())


def lasso_objective(problem: LassoProblem, omega: np.ndarray) -> float:
    n = problem.op.n
    return _objective_mat(problem.op, np.asarray(omega).reshape((n, n), order="F"),
                          problem.op.block_from_vec(problem.a_prime), problem.lam)


def kkt_residual(problem: LassoProblem, omega: np.ndarray) -> float:
    """Max violation of the LASSO optimality conditions at omega."""
    g = problem.op.adjoint(problem.op.forward(omega) - problem.a_prime)
    lam = problem.lam
    omega = np.asarray(omega)
    on = omega != 0
    res_on = np.abs(g[on] + lam * np.sign(omega[on])) if on.any() else np.array([0.0])
    res_off = np.maximum(np.abs(g[~on]) - lam, 0.0) if (~on).any() else np.array([0.0])
    return float(max(res_on.max(), res_off.max()))


def default_lambda(op: MeasurementOp, a_prime: np.ndarray, scale: float = 0.01) -> float:
    """Data-relative regularization: scale * ||adjoint(a')||_inf.

    At scale 1.0 the LASSO solution is exactly zero; the 0.01 default keeps
    behavior stable across SNR levels.
    """
    return scale * float(np.abs(op.adjoint(np.asarray(a_prime, dtype=complex))).max())


class _Monitor:
    """Trace recording plus the consecutive-increase divergence guard."""

    def __init__(self, trace: SolveTrace):
        self.trace = trace
        self.prev = np.inf
        self.streak = 0

    def record(self, k: int, obj: float, nnz: int, rel: float) -> None:
        self.trace.append(k, obj, nnz, rel)
        self.streak = self.streak + 1 if obj > self.prev else 0
        if self.streak > 5:
            raise SolverDiverged(
                f"objective increased for {self.streak} consecutive iterations at k={k}; "
                "check the measurement forward/adjoint pair"
            )
        self.prev = obj


def ista_solve(problem: LassoProblem, cfg: SolverConfig | None = None) -> tuple[np.ndarray, SolveTrace]:
    """Proximal-gradient LASSO solve from zero; returns (omega_hat, trace).

    Stops on relative iterate change below ``cfg.tol`` or at ``max_iters``.
    With ``cfg.trace`` the objective is recorded at every visited iterate
    (an extra operator application per iteration in fista mode) and the
    divergence guard is active.
    """
    cfg = cfg or SolverConfig()
    op, lam = problem.op, problem.lam
    a_block = op.block_from_vec(problem.a_prime)
    n = op.n
    if cfg.precision == "single":
        kernel = RfftGradKernel(op, np.float32)
        a_block = a_block.astype(np.complex64)
        w = np.zeros((n, n), dtype=np.float32)
        fwd, grad = kernel.forward_block, kernel.grad
    else:
        w = np.zeros((n, n))
        fwd, grad = op.forward_mat, op.gradient_step_mat
    t = cfg.step
    theta = t * lam
    trace = SolveTrace()
    monitor = _Monitor(trace) if cfg.trace else None

    def finish(w: np.ndarray) -> tuple[np.ndarray, SolveTrace]:
        if cfg.trace:
            r = fwd(w) - a_block
            obj = 0.5 * float(np.vdot(r, r).real) + lam * float(np.abs(w).sum())
            trace.append(trace.iters[-1] + 1 if trace.iters else 0, obj, int(np.count_nonzero(w)), 0.0)
        return w.astype(float).flatten(order="F"), trace

    if cfg.acceleration == "ista":
        for k in range(cfg.max_iters):
            r = fwd(w) - a_block
            if monitor is not None:
                obj = 0.5 * float(np.vdot(r, r).real) + lam * float(np.abs(w).sum())
            adj = op.adjoint_mat(r) if cfg.precision == "double" else kernel.adjoint_block(r)
            w_new = soft_threshold(w - t * adj, theta)
            if cfg.nonneg:
                np.maximum(w_new, 0.0, out=w_new)
            denom = np.linalg.norm(w)
            rel = float(np.linalg.norm(w_new - w) / denom) if denom > 0 else np.inf
            if monitor is not None:
                monitor.record(k, obj, int(np.count_nonzero(w)), rel)
            w = w_new
            if rel < cfg.tol:
                break
        return finish(w)

    # fista, with buffer reuse in the hot loop
    y = w.copy()
    s = 1.0
    buf = np.empty_like(w)
    ybuf = np.empty_like(w)
    denom = 0.0
    theta_arr = np.asarray(theta, dtype=w.dtype) if np.ndim(theta) else theta
    for k in range(cfg.max_iters):
        u = grad(y, a_block)
        if t != 1.0:
            u *= t
        np.subtract(y, u, out=u)
        # fused soft threshold: |u| - theta, clamped, with u's signs
        np.abs(u, out=buf)
        buf -= theta_arr
        np.maximum(buf, 0.0, out=buf)
        w_new = np.copysign(buf, u)
        if cfg.nonneg:
            np.maximum(w_new, 0.0, out=w_new)
        delta = np.subtract(w_new, w, out=u)  # u no longer needed
        # adaptive restart: drop momentum when it points against descent
        np.subtract(y, w_new, out=buf)
        if float(np.vdot(buf, delta).real) > 0:
            s = 1.0
        # plain-python scalar math keeps the f32 path unpromoted
        s_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * s * s))
        np.multiply(delta, (s - 1.0) / s_new, out=buf)
        y = np.add(w_new, buf, out=ybuf)
        rel = float(np.linalg.norm(delta) / denom) if denom > 0 else np.inf
        if monitor is not None:
            monitor.record(k, _objective_mat(op, w_new.astype(float), a_block.astype(complex), lam),
                           int(np.count_nonzero(w_new)), rel)
        ybuf = w  # recycle the old iterate's storage for the next y
        w = w_new
        denom = float(np.linalg.norm(w))
        s = s_new
        if rel < cfg.tol:
            break
    return finish(w)


def l1app_reconstruct(z: np.ndarray, lam: float | None = None, mask: MaskSpec = L1APP_MASK,
                      cfg: SolverConfig | None = None) -> np.ndarray:
    """Sparse TFD baseline: small centered AF mask plus an accelerated solve.

    Pipeline: ambiguity function -> centered mask (13x13 by default) ->
    FISTA (2000 iterations, tol 1e-6) -> N x N TFD estimate.
    """
    z = np.asarray(z, dtype=complex)
    n = z.size
    op = MeasurementOp(n, mask)
    a_prime = apply_mask(af_direct(z), mask)
    if not np.any(a_prime):
        return np.zeros((n, n))
    if lam is None:
        lam = default_lambda(op, a_prime)
    if cfg is None:
        cfg = SolverConfig(max_iters=2000, tol=1e-6, acceleration="fista", trace=False)
    omega, _ = ista_solve(LassoProblem(op, a_prime, lam), cfg)
    return omega.reshape((n, n), order="F")
