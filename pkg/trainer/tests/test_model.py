"""Model-level tests: operator adjointness, U-Net output, unrolled forward."""

import numpy as np
import pytest
import torch

from uista_trainer.model import MaskedFourier, ThresholdUNet, UnrolledNet


def test_masked_fourier_adjointness():
    op = MaskedFourier(32, 5, 7)
    gen = torch.Generator().manual_seed(0)
    for _ in range(20):
        w = torch.randn(1, 32, 32, generator=gen, dtype=torch.float64)
        y = torch.randn(1, 5, 7, generator=gen, dtype=torch.float64) \
            + 1j * torch.randn(1, 5, 7, generator=gen, dtype=torch.float64)
        lhs = torch.vdot(y.flatten(), op.forward(w).flatten()).real
        rhs = torch.vdot(w.flatten().to(torch.complex128), op.adjoint(y).flatten().to(torch.complex128)).real
        assert abs(float(lhs - rhs)) < 1e-10


def test_masked_fourier_rows_orthonormal():
    op = MaskedFourier(32, 5, 5)
    gen = torch.Generator().manual_seed(1)
    y = torch.randn(1, 5, 5, generator=gen, dtype=torch.float64) \
        + 1j * torch.randn(1, 5, 5, generator=gen, dtype=torch.float64)
    z = op.adjoint(y).to(torch.complex128)
    # real projection halves the energy off the self-conjugate directions,
    # but forward o adjoint is exact on conjugate-symmetric observations
    w = torch.randn(1, 32, 32, generator=gen, dtype=torch.float64)
    y2 = op.forward(w)
    back = op.forward(op.adjoint(y2))
    assert float((back - y2).abs().max()) < 1e-12


def test_unet_output_shape_and_sign():
    torch.manual_seed(0)
    net = ThresholdUNet()
    x = torch.randn(2, 1, 64, 64)
    with torch.no_grad():
        out = net(x)
    assert out.shape == (2, 1, 64, 64)
    assert float(out.min()) >= 0.0


def test_unrolled_zero_observation_gives_zero():
    torch.manual_seed(0)
    model = UnrolledNet(k=3, n=32, d_nu=5, d_tau=5)
    with torch.no_grad():
        out = model(torch.zeros(2, 5, 5, dtype=torch.complex64))
    assert torch.equal(out, torch.zeros(2, 32, 32))


def test_unrolled_collects_k_thetas():
    torch.manual_seed(0)
    model = UnrolledNet(k=4, n=32, d_nu=5, d_tau=5)
    a = model.op.forward(torch.rand(1, 32, 32))
    with torch.no_grad():
        out, thetas = model(a, collect_thetas=True)
    assert len(thetas) == 4
    assert all(float(t.min()) >= 0.0 for t in thetas)
    assert out.shape == (1, 32, 32)


def test_grid_must_be_divisible_by_four():
    with pytest.raises(ValueError, match="divisible by 4"):
        UnrolledNet(k=1, n=30, d_nu=5, d_tau=5)


def test_layer_tensors_have_bundle_shapes():
    model = UnrolledNet(k=1, n=32, d_nu=5, d_tau=5)
    tensors = model.layer_tensors(0)
    assert tensors["enc1a.w"].shape == (16, 1, 3, 3)
    assert tensors["dec2a.w"].shape == (32, 64, 3, 3)
    assert tensors["head.w"].shape == (1, 16, 1, 1)
    assert tensors["head.b"].shape == (1,)
