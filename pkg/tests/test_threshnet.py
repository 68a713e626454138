"""U-Net threshold inference and weight-bundle format tests."""

import json
import math
import struct

import numpy as np
import pytest

from tfsparse.threshnet import (DEFAULT_CHANNELS, WeightBundle, WeightFormatError,
                                layer_shapes, load_weights, parameter_count, random_bundle,
                                receptive_field_radius, save_weights, unet_forward,
                                zero_bundle)

N = 64  # divisible by 4; keeps forward passes fast


def test_zero_weights_give_log2_everywhere():
    bundle = zero_bundle(k=2, n_hint=N)
    out = unet_forward(bundle.unets[0], np.random.default_rng(0).standard_normal((N, N)))
    assert out.shape == (N, N)
    assert np.allclose(out, math.log(2.0), atol=1e-6)


def test_forward_requires_divisible_by_four():
    bundle = zero_bundle(k=1, n_hint=N)
    with pytest.raises(ValueError, match="divisible by 4"):
        unet_forward(bundle.unets[0], np.zeros((30, 30)))
    with pytest.raises(ValueError, match="square"):
        unet_forward(bundle.unets[0], np.zeros((32, 16)))


def test_save_load_round_trip_is_bit_exact(tmp_path):
    bundle = random_bundle(k=3, n_hint=128, seed=5)
    path = tmp_path / "w.uwb"
    save_weights(bundle, path)
    back = load_weights(path)
    assert back.k == 3
    assert back.n_hint == 128
    assert back.t == bundle.t
    assert back.flags == bundle.flags
    for a, b in zip(bundle.unets, back.unets):
        assert set(a) == set(b)
        for name in a:
            assert np.array_equal(a[name].astype(np.float32), b[name]), name
    # saving the loaded bundle reproduces the file byte for byte
    save_weights(back, tmp_path / "w2.uwb")
    assert (tmp_path / "w.uwb").read_bytes() == (tmp_path / "w2.uwb").read_bytes()


def test_truncated_file_reports_byte_counts(tmp_path):
    path = tmp_path / "w.uwb"
    save_weights(random_bundle(k=1, n_hint=N, seed=0), path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-10])
    with pytest.raises(WeightFormatError, match=r"\d+ bytes"):
        load_weights(path)


def test_bad_magic_and_version(tmp_path):
    path = tmp_path / "w.uwb"
    path.write_bytes(b"XXXX" + b"\x00" * 16)
    with pytest.raises(WeightFormatError, match="magic"):
        load_weights(path)
    save_weights(random_bundle(k=1, n_hint=N, seed=0), path)
    raw = bytearray(path.read_bytes())
    mlen = struct.unpack("<I", raw[4:8])[0]
    manifest = json.loads(raw[8 : 8 + mlen].decode())
    manifest["version"] = 99
    new_manifest = json.dumps(manifest, sort_keys=True).encode()
    path.write_bytes(b"UWB1" + struct.pack("<I", len(new_manifest)) + new_manifest + bytes(raw[8 + mlen :]))
    with pytest.raises(WeightFormatError, match="version"):
        load_weights(path)


def test_validation_names_offending_tensor():
    bundle = random_bundle(k=2, n_hint=N, seed=1)
    bundle.unets[1]["enc2a.w"] = np.zeros((3, 3, 3, 3), dtype=np.float32)
    with pytest.raises(WeightFormatError, match="k1.enc2a.w"):
        bundle.validate()
    bundle = random_bundle(k=1, n_hint=N, seed=1)
    bundle.unets[0]["head.b"] = np.array([np.nan], dtype=np.float32)
    with pytest.raises(WeightFormatError, match="k0.head.b"):
        bundle.validate()


def test_parameter_count_from_manifest(tmp_path):
    # count asserted from the written manifest, not hard-coded
    k = 5
    path = tmp_path / "w.uwb"
    save_weights(random_bundle(k=k, n_hint=128, seed=2), path)
    raw = path.read_bytes()
    mlen = struct.unpack("<I", raw[4:8])[0]
    manifest = json.loads(raw[8 : 8 + mlen].decode())
    per_net = sum(int(np.prod(t["shape"])) for t in manifest["tensors"]) // k
    assert per_net == parameter_count(DEFAULT_CHANNELS)
    by_algebra = sum(int(np.prod(shape)) for _, shape in layer_shapes(DEFAULT_CHANNELS))
    assert per_net == by_algebra
    assert manifest["scalars"]["t"] == [1.0] * k


def test_forward_is_deterministic():
    bundle = random_bundle(k=1, n_hint=N, seed=3)
    x = np.random.default_rng(4).standard_normal((N, N))
    out1 = unet_forward(bundle.unets[0], x)
    out2 = unet_forward(bundle.unets[0], x)
    assert np.array_equal(out1, out2)


def test_output_nonnegative_for_random_bundles():
    x = np.random.default_rng(5).standard_normal((N, N)) * 10.0
    for seed in range(3):
        bundle = random_bundle(k=1, n_hint=N, seed=seed, scale=2.0)
        assert unet_forward(bundle.unets[0], x).min() >= 0.0


def test_receptive_field_locality():
    radius = receptive_field_radius()
    bundle = random_bundle(k=1, n_hint=128, seed=6)
    rng = np.random.default_rng(7)
    x = rng.standard_normal((128, 128))
    base = unet_forward(bundle.unets[0], x)
    x2 = x.copy()
    x2[64, 64] += 5.0
    delta = np.abs(unet_forward(bundle.unets[0], x2) - base)
    changed = delta > 0
    assert changed.any()
    ys, xs = np.where(changed)
    spread = max(np.abs(ys - 64).max(), np.abs(xs - 64).max())
    assert spread <= radius, f"influence spread {spread} exceeds radius {radius}"


def test_translation_equivariance_with_uniform_kernels():
    channels = DEFAULT_CHANNELS
    tensors = {}
    for name, shape in layer_shapes(channels):
        if name.endswith(".b"):
            tensors[name] = np.zeros(shape, dtype=np.float32)
        else:
            fan_in = int(np.prod(shape[1:]))
            tensors[name] = np.full(shape, 0.5 / fan_in, dtype=np.float32)
    n = 128
    rng = np.random.default_rng(8)
    x = rng.standard_normal((n, n))
    shift = 8  # multiple of the total pooling factor
    out = unet_forward(tensors, x)
    out_shifted = unet_forward(tensors, np.roll(x, (shift, shift), axis=(0, 1)))
    rolled = np.roll(out, (shift, shift), axis=(0, 1))
    margin = receptive_field_radius() + shift
    inner = (slice(margin, n - margin), slice(margin, n - margin))
    assert out_shifted[inner].size > 0
    assert np.allclose(out_shifted[inner], rolled[inner], atol=1e-6)


def test_small_perturbations_stay_bounded():
    bundle = random_bundle(k=1, n_hint=N, seed=9)
    rng = np.random.default_rng(10)
    x = rng.standard_normal((N, N))
    base = unet_forward(bundle.unets[0], x)
    d = rng.standard_normal((N, N))
    d /= np.linalg.norm(d)
    gain_ref = np.linalg.norm(unet_forward(bundle.unets[0], x + 1e-2 * d) - base) / 1e-2
    for eps in (1e-3, 3e-3):
        gain = np.linalg.norm(unet_forward(bundle.unets[0], x + eps * d) - base) / eps
        assert gain <= 3.0 * gain_ref + 1e-6
