"""The unrolled reconstruction network.

K layers, each: one gradient step of the masked-Fourier data-fit term with
a learnable scalar step size, then soft thresholding with a nonnegative
threshold field produced by that layer's own small U-Net from the
pre-threshold map (normalized by its max-abs on the way in, the raw
softplus output scaled back by the same factor).  The measurement operator
is fixed, never learned.

Conventions mirror the inference side exactly: TFD matrices are (freq bin,
time), the ambiguity plane is origin-centered with Doppler on axis 0 and
lag on axis 1, and the centered d_nu x d_tau block is the observation.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

CHANNELS = (16, 32, 64)


class _LeakyBackwardSoftThreshold(torch.autograd.Function):
    """Exact soft threshold with an optionally leaky clamped-branch backward.

    Forward: sign(u) * max(|u| - theta, 0), exactly as at inference.
    Backward: the true subgradient on the live branch; on the clamped branch
    the true gradient is identically zero, which makes the all-clamped state
    an inescapable attractor for training, so a small ``leak`` keeps a
    resurrection signal flowing there (target pixels push their thresholds
    back down).  ``leak=0`` gives the exact gradient.
    """

    @staticmethod
    def forward(ctx, u, theta, leak):
        sign = torch.sign(u)
        live = u.abs() > theta
        ctx.save_for_backward(sign, live)
        ctx.leak = leak
        return sign * (u.abs() - theta).clamp_min(0.0)

    @staticmethod
    def backward(ctx, grad_out):
        sign, live = ctx.saved_tensors
        gate = live.to(grad_out.dtype)
        if ctx.leak:
            gate = gate + ctx.leak * (~live).to(grad_out.dtype)
        grad_u = grad_out * gate
        grad_theta = -grad_out * sign * gate
        return grad_u, grad_theta, None


def soft_threshold(u: torch.Tensor, theta: torch.Tensor, leak: float = 0.0) -> torch.Tensor:
    return _LeakyBackwardSoftThreshold.apply(u, theta, leak)


class MaskedFourier:
    """Forward/adjoint of the centered ambiguity-plane sampling rectangle."""

    def __init__(self, n: int, d_nu: int, d_tau: int):
        if n % 2 or d_nu % 2 == 0 or d_tau % 2 == 0:
            raise ValueError("grid must be even, mask dims odd")
        self.n = n
        self.d_nu, self.d_tau = d_nu, d_tau
        self.r0 = n // 2 - (d_nu - 1) // 2
        self.c0 = n // 2 - (d_tau - 1) // 2

    def forward(self, w: torch.Tensor) -> torch.Tensor:
        a = torch.fft.fft2(w)  # complex output matching the input precision
        a = torch.fft.fftshift(a.transpose(-2, -1), dim=(-2, -1)) / self.n
        return a[..., self.r0 : self.r0 + self.d_nu, self.c0 : self.c0 + self.d_tau]

    def adjoint(self, y: torch.Tensor) -> torch.Tensor:
        shape = (*y.shape[:-2], self.n, self.n)
        z = torch.zeros(shape, dtype=y.dtype, device=y.device)
        z[..., self.r0 : self.r0 + self.d_nu, self.c0 : self.c0 + self.d_tau] = y
        z = torch.fft.ifftshift(z, dim=(-2, -1)).transpose(-2, -1)
        return (torch.fft.ifft2(z) * self.n).real


class ThresholdUNet(nn.Module):
    """3-level encoder/decoder, nearest-neighbor upsampling, softplus head.

    The head bias starts at -4 so initial thresholds are near zero
    (softplus(-4) ~ 0.018): with large initial thresholds the soft-threshold
    clamps every coefficient to zero and its gradient vanishes identically,
    freezing training at the all-zero output.
    """

    HEAD_BIAS_INIT = -4.0

    def __init__(self, channels=CHANNELS):
        super().__init__()
        c1, c2, c3 = channels
        conv = lambda ci, co, k=3: nn.Conv2d(ci, co, k, padding=k // 2)
        self.enc1a, self.enc1b = conv(1, c1), conv(c1, c1)
        self.enc2a, self.enc2b = conv(c1, c2), conv(c2, c2)
        self.bott_a, self.bott_b = conv(c2, c3), conv(c3, c3)
        self.up2 = conv(c3, c2)
        self.dec2a, self.dec2b = conv(2 * c2, c2), conv(c2, c2)
        self.up1 = conv(c2, c1)
        self.dec1a, self.dec1b = conv(2 * c1, c1), conv(c1, c1)
        self.head = conv(c1, 1, k=1)
        nn.init.constant_(self.head.bias, self.HEAD_BIAS_INIT)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        f1 = F.relu(self.enc1b(F.relu(self.enc1a(x))))
        f2 = F.relu(self.enc2b(F.relu(self.enc2a(F.max_pool2d(f1, 2)))))
        f3 = F.relu(self.bott_b(F.relu(self.bott_a(F.max_pool2d(f2, 2)))))
        u2 = F.relu(self.up2(F.interpolate(f3, scale_factor=2, mode="nearest")))
        d2 = F.relu(self.dec2b(F.relu(self.dec2a(torch.cat([u2, f2], dim=1)))))
        u1 = F.relu(self.up1(F.interpolate(d2, scale_factor=2, mode="nearest")))
        d1 = F.relu(self.dec1b(F.relu(self.dec1a(torch.cat([u1, f1], dim=1)))))
        return F.softplus(self.head(d1))


class UnrolledNet(nn.Module):
    def __init__(self, k: int = 5, n: int = 128, d_nu: int = 29, d_tau: int = 29,
                 channels=CHANNELS, shrink_leak: float = 0.0):
        super().__init__()
        if n % 4:
            raise ValueError("grid size must be divisible by 4")
        self.op = MaskedFourier(n, d_nu, d_tau)
        self.k = k
        self.n = n
        self.channels = tuple(channels)
        self.shrink_leak = shrink_leak  # backward-only relaxation; forward is exact
        self.unets = nn.ModuleList(ThresholdUNet(channels) for _ in range(k))
        self.t = nn.Parameter(torch.ones(k))

    def forward(self, a_block: torch.Tensor, collect_thetas: bool = False):
        batch = a_block.shape[0]
        dtype = torch.float64 if a_block.dtype == torch.complex128 else torch.float32
        w = torch.zeros(batch, self.n, self.n, dtype=dtype, device=a_block.device)
        thetas = []
        for k in range(self.k):
            u = w - self.t[k] * self.op.adjoint(self.op.forward(w) - a_block)
            scale = u.abs().amax(dim=(-2, -1), keepdim=True)
            safe = torch.where(scale > 0, scale, torch.ones_like(scale))
            theta_raw = self.unets[k]((u / safe).unsqueeze(1)).squeeze(1)
            theta = torch.where(scale > 0, theta_raw * scale, theta_raw)
            w = soft_threshold(u, theta, self.shrink_leak if self.training else 0.0)
            if collect_thetas:
                thetas.append(theta)
        if collect_thetas:
            return w, thetas
        return w

    def layer_tensors(self, k: int) -> dict[str, torch.Tensor]:
        """Named weight tensors for one layer, in the bundle's layout names."""
        net = self.unets[k]
        out = {}
        for name in ("enc1a", "enc1b", "enc2a", "enc2b", "bott_a", "bott_b",
                     "up2", "dec2a", "dec2b", "up1", "dec1a", "dec1b", "head"):
            module = getattr(net, name)
            out[f"{name}.w"] = module.weight.detach()
            out[f"{name}.b"] = module.bias.detach()
        return out
