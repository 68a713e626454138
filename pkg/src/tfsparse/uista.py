"""K-layer unrolled shrinkage-thresholding reconstruction.

Each layer applies the measurement gradient step with its own scalar step
size, then soft-thresholds with a per-layer threshold field produced by a
pluggable provider - a trained U-Net in the learned configuration, or a
constant/zero map for baselines and tests.  The measurement operator is
fixed (never learned), so the linear part is applied matrix-free.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .measure import MaskSpec, MeasurementOp
from .solver import soft_threshold
from .threshnet import DEFAULT_FLAGS, WeightBundle, unet_forward

__all__ = ["ThresholdProvider", "ConstantThreshold", "UnetThreshold", "UistaModel",
           "uista_reconstruct", "uista_layer_trace", "DEFAULT_MASK"]

DEFAULT_MASK = MaskSpec(29, 29)


class ThresholdProvider(Protocol):
    """Produces the layer-k threshold field from the layer's N x N input map."""

    def theta(self, k: int, x: np.ndarray) -> np.ndarray | float: ...


@dataclass(frozen=True)
class ConstantThreshold:
    value: float

    def theta(self, k: int, x: np.ndarray) -> float:
        return self.value


class UnetThreshold:
    """Threshold fields from a weight bundle's per-layer U-Nets.

    Honors the bundle flags: the input map is divided by its max-abs before
    the forward pass and the raw softplus output is scaled back by the same
    factor, keeping thresholds in the iterate's dynamic range.
    """

    def __init__(self, bundle: WeightBundle):
        bundle.validate()
        self.bundle = bundle
        self.flags = {**DEFAULT_FLAGS, **bundle.flags}

    def theta(self, k: int, x: np.ndarray) -> np.ndarray:
        scale = float(np.abs(x).max())
        if self.flags.get("normalize_input", True) and scale > 0:
            net_in = x / scale
        else:
            net_in = x
        th = unet_forward(self.bundle.unets[k], net_in).astype(float)
        if self.flags.get("scale_theta_by_input_max", True) and scale > 0:
            th = th * scale
        return th


@dataclass
class UistaModel:
    op: MeasurementOp
    provider: ThresholdProvider
    t: Sequence[float]
    threshold_input: str = "pre"  # "pre": feed the gradient-step output u

    def __post_init__(self):
        if len(self.t) < 1:
            raise ValueError("need at least one layer")
        if self.threshold_input not in ("pre", "iterate"):
            raise ValueError(f"unknown threshold_input {self.threshold_input!r}")

    @property
    def k(self) -> int:
        return len(self.t)

    @classmethod
    def from_bundle(cls, bundle: WeightBundle, mask: MaskSpec = DEFAULT_MASK) -> "UistaModel":
        if bundle.n_hint % 4:
            raise ValueError(f"bundle grid hint {bundle.n_hint} is not divisible by 4")
        op = MeasurementOp(bundle.n_hint, mask)
        flags = {**DEFAULT_FLAGS, **bundle.flags}
        return cls(op=op, provider=UnetThreshold(bundle), t=list(bundle.t),
                   threshold_input=flags.get("threshold_input", "pre"))


def _run(model: UistaModel, a_prime: np.ndarray, keep_trace: bool):
    op = model.op
    a_prime = np.asarray(a_prime, dtype=complex)
    if a_prime.shape != (op.m,):
        raise ValueError(f"expected observation of length {op.m}, got shape {a_prime.shape}")
    n = op.n
    omega = np.zeros(n * n)
    iterates = [omega.reshape((n, n), order="F")] if keep_trace else None
    thetas = [] if keep_trace else None

    for k in range(model.k):
        u = omega - model.t[k] * op.adjoint(op.forward(omega) - a_prime)
        net_in = u if model.threshold_input == "pre" else omega
        theta = model.provider.theta(k, net_in.reshape((n, n), order="F"))
        if isinstance(theta, np.ndarray):
            theta_vec = theta.flatten(order="F")
        else:
            theta_vec = theta
        omega = soft_threshold(u, theta_vec)
        if not np.all(np.isfinite(omega)):
            raise FloatingPointError(f"non-finite iterate after layer {k}")
        if keep_trace:
            iterates.append(omega.reshape((n, n), order="F"))
            thetas.append(np.broadcast_to(np.asarray(theta, dtype=float), (n, n))
                          if not isinstance(theta, np.ndarray) else theta)

    return omega.reshape((n, n), order="F"), iterates, thetas


def uista_reconstruct(model: UistaModel, a_prime: np.ndarray) -> np.ndarray:
    """Run the K unrolled layers from a zero initial iterate."""
    out, _, _ = _run(model, a_prime, keep_trace=False)
    return out


def uista_layer_trace(model: UistaModel, a_prime: np.ndarray):
    """Same computation, retaining all K+1 iterates and K threshold maps."""
    out, iterates, thetas = _run(model, a_prime, keep_trace=True)
    assert np.array_equal(out, iterates[-1])
    return iterates, thetas
