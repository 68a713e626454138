"""Forward-only U-Net inference for structure-aware threshold maps.

A small 3-level encoder/decoder (channels 16/32/64, 3x3 convolutions,
2x2 max-pool, nearest-neighbor upsampling plus 3x3 conv, skip concatenation,
1x1 softplus head) maps an N x N iterate to a nonnegative N x N threshold
field.  Inference is float32 and CPU-only.

Weight bundles hold K independent U-Nets plus K step scalars and travel
in a `.uwb` file: magic ``UWB1``, a little-endian u32 manifest length, a JSON
manifest, then one contiguous blob of little-endian float32 tensors
(row-major, convs ordered (out_channels, in_channels, kh, kw)).  The byte
layout is fixed so other implementations can produce or consume it.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "DEFAULT_CHANNELS",
    "WeightBundle",
    "WeightFormatError",
    "layer_shapes",
    "parameter_count",
    "load_weights",
    "save_weights",
    "unet_forward",
    "random_bundle",
    "zero_bundle",
    "receptive_field_radius",
]

MAGIC = b"UWB1"
FORMAT_VERSION = 1
DEFAULT_CHANNELS = (16, 32, 64)
DEFAULT_FLAGS = {
    "normalize_input": True,
    "threshold_input": "pre",
    "scale_theta_by_input_max": True,
}


class WeightFormatError(ValueError):
    """Raised for malformed, truncated or inconsistent weight files."""


def layer_shapes(channels: tuple[int, int, int] = DEFAULT_CHANNELS, in_channels: int = 1) -> list[tuple[str, tuple[int, ...]]]:
    """Ordered (name, shape) table for one U-Net; defines the blob layout."""
    c1, c2, c3 = channels
    return [
        ("enc1a.w", (c1, in_channels, 3, 3)), ("enc1a.b", (c1,)),
        ("enc1b.w", (c1, c1, 3, 3)), ("enc1b.b", (c1,)),
        ("enc2a.w", (c2, c1, 3, 3)), ("enc2a.b", (c2,)),
        ("enc2b.w", (c2, c2, 3, 3)), ("enc2b.b", (c2,)),
        ("bott_a.w", (c3, c2, 3, 3)), ("bott_a.b", (c3,)),
        ("bott_b.w", (c3, c3, 3, 3)), ("bott_b.b", (c3,)),
        ("up2.w", (c2, c3, 3, 3)), ("up2.b", (c2,)),
        ("dec2a.w", (c2, 2 * c2, 3, 3)), ("dec2a.b", (c2,)),
        ("dec2b.w", (c2, c2, 3, 3)), ("dec2b.b", (c2,)),
        ("up1.w", (c1, c2, 3, 3)), ("up1.b", (c1,)),
        ("dec1a.w", (c1, 2 * c1, 3, 3)), ("dec1a.b", (c1,)),
        ("dec1b.w", (c1, c1, 3, 3)), ("dec1b.b", (c1,)),
        ("head.w", (1, c1, 1, 1)), ("head.b", (1,)),
    ]


def parameter_count(channels: tuple[int, int, int] = DEFAULT_CHANNELS) -> int:
    return sum(int(np.prod(shape)) for _, shape in layer_shapes(channels))


def receptive_field_radius(channels: tuple[int, int, int] = DEFAULT_CHANNELS) -> int:
    """Chebyshev radius (input pixels) one output pixel can depend on.

    Walks the layer stack accumulating (kernel-1)*jump; upsampling halves
    the jump and adds nothing.  Rounded up one pixel for pooling alignment.
    """
    diameter, jump = 1, 1
    for kernel, pool in ((3, False), (3, False), (2, True), (3, False), (3, False), (2, True),
                         (3, False), (3, False)):
        diameter += (kernel - 1) * jump
        if pool:
            jump *= 2
    jump //= 2
    for kernel in (3, 3, 3):  # up2, dec2a, dec2b at stride 2
        diameter += (kernel - 1) * jump
    jump //= 2
    for kernel in (3, 3, 3):  # up1, dec1a, dec1b at stride 1
        diameter += (kernel - 1) * jump
    return diameter // 2 + 2


@dataclass
class WeightBundle:
    """K per-iteration U-Nets plus K step scalars and inference flags."""

    unets: list[dict[str, np.ndarray]]
    t: list[float]
    n_hint: int
    channels: tuple[int, int, int] = DEFAULT_CHANNELS
    flags: dict = field(default_factory=lambda: dict(DEFAULT_FLAGS))

    @property
    def k(self) -> int:
        return len(self.unets)

    def validate(self) -> None:
        if self.k < 1:
            raise WeightFormatError("bundle must hold at least one U-Net")
        if len(self.t) != self.k:
            raise WeightFormatError(f"{self.k} U-Nets but {len(self.t)} step scalars")
        expected = layer_shapes(self.channels)
        for i, tensors in enumerate(self.unets):
            for name, shape in expected:
                if name not in tensors:
                    raise WeightFormatError(f"U-Net {i} is missing tensor {name!r}")
                got = tensors[name].shape
                if tuple(got) != shape:
                    raise WeightFormatError(f"tensor k{i}.{name} has shape {tuple(got)}, expected {shape}")
                if not np.all(np.isfinite(tensors[name])):
                    raise WeightFormatError(f"tensor k{i}.{name} contains NaN/Inf")
            extra = set(tensors) - {name for name, _ in expected}
            if extra:
                raise WeightFormatError(f"U-Net {i} has unexpected tensors {sorted(extra)}")
        if not all(np.isfinite(self.t)):
            raise WeightFormatError("step scalars contain NaN/Inf")


def save_weights(bundle: WeightBundle, path: str | Path) -> None:
    bundle.validate()
    shapes = layer_shapes(bundle.channels)
    tensors_meta = []
    blob_parts = []
    offset = 0
    for i, tensors in enumerate(bundle.unets):
        for name, shape in shapes:
            arr = np.ascontiguousarray(tensors[name], dtype="<f4")
            nbytes = arr.size * 4
            tensors_meta.append({
                "name": f"k{i}.{name}",
                "shape": list(shape),
                "dtype": "f32",
                "offset": offset,
                "len": nbytes,
            })
            blob_parts.append(arr.tobytes())
            offset += nbytes
    manifest = {
        "version": FORMAT_VERSION,
        "K": bundle.k,
        "N_hint": bundle.n_hint,
        "arch": {
            "levels": 3,
            "channels": list(bundle.channels),
            "kernel": 3,
            "head": "softplus",
            "concat": "up_first",
            "activation": "relu",
        },
        "flags": dict(bundle.flags),
        "tensors": tensors_meta,
        "scalars": {"t": [float(v) for v in bundle.t]},
    }
    manifest_bytes = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(manifest_bytes)))
        fh.write(manifest_bytes)
        for part in blob_parts:
            fh.write(part)


def load_weights(path: str | Path) -> WeightBundle:
    raw = Path(path).read_bytes()
    if len(raw) < 8 or raw[:4] != MAGIC:
        raise WeightFormatError(f"{path}: bad magic (expected {MAGIC!r})")
    (manifest_len,) = struct.unpack("<I", raw[4:8])
    if len(raw) < 8 + manifest_len:
        raise WeightFormatError(f"{path}: truncated manifest ({len(raw) - 8} of {manifest_len} bytes)")
    try:
        manifest = json.loads(raw[8 : 8 + manifest_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise WeightFormatError(f"{path}: manifest is not valid JSON: {exc}") from exc
    if manifest.get("version") != FORMAT_VERSION:
        raise WeightFormatError(f"{path}: unsupported format version {manifest.get('version')!r}")
    blob = raw[8 + manifest_len :]
    expected_bytes = sum(t["len"] for t in manifest["tensors"])
    if len(blob) != expected_bytes:
        raise WeightFormatError(f"{path}: blob holds {len(blob)} bytes, manifest expects {expected_bytes}")

    k = int(manifest["K"])
    channels = tuple(manifest["arch"]["channels"])
    unets: list[dict[str, np.ndarray]] = [dict() for _ in range(k)]
    for meta in manifest["tensors"]:
        name = meta["name"]
        try:
            prefix, layer = name.split(".", 1)
            idx = int(prefix[1:])
        except (ValueError, IndexError) as exc:
            raise WeightFormatError(f"{path}: malformed tensor name {name!r}") from exc
        if not (0 <= idx < k):
            raise WeightFormatError(f"{path}: tensor {name!r} outside K={k}")
        count = meta["len"] // 4
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=meta["offset"])
        arr = arr.reshape(tuple(meta["shape"])).astype(np.float32)
        unets[idx][layer] = arr
    bundle = WeightBundle(
        unets=unets,
        t=[float(v) for v in manifest["scalars"]["t"]],
        n_hint=int(manifest["N_hint"]),
        channels=channels,  # type: ignore[arg-type]
        flags=dict(manifest.get("flags", DEFAULT_FLAGS)),
    )
    bundle.validate()
    return bundle


# ---------------------------------------------------------------------------
# forward pass

def _conv3x3(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    c, h, width = x.shape
    out_c = w.shape[0]
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    win = sliding_window_view(xp, (3, 3), axis=(1, 2))  # (c, h, w, 3, 3)
    col = win.transpose(1, 2, 0, 3, 4).reshape(h * width, c * 9)
    out = col @ w.reshape(out_c, c * 9).T.astype(np.float32) + b.astype(np.float32)
    return out.T.reshape(out_c, h, width)


def _conv1x1(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.tensordot(w[:, :, 0, 0].astype(np.float32), x, axes=(1, 0))
    return out + b.astype(np.float32)[:, None, None]


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0, out=x)


def _maxpool2(x: np.ndarray) -> np.ndarray:
    c, h, w = x.shape
    return x.reshape(c, h // 2, 2, w // 2, 2).max(axis=(2, 4))


def _upsample2(x: np.ndarray) -> np.ndarray:
    return np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(np.float32(0.0), x)


def unet_forward(tensors: dict[str, np.ndarray], x: np.ndarray) -> np.ndarray:
    """Run one U-Net on an N x N map; returns a nonnegative N x N float32 map."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"expected a square 2D input, got shape {x.shape}")
    if x.shape[0] % 4:
        raise ValueError(f"input size must be divisible by 4, got {x.shape[0]}")
    h = x[None, :, :]

    f1 = _relu(_conv3x3(_relu(_conv3x3(h, tensors["enc1a.w"], tensors["enc1a.b"])),
                        tensors["enc1b.w"], tensors["enc1b.b"]))
    f2 = _relu(_conv3x3(_relu(_conv3x3(_maxpool2(f1), tensors["enc2a.w"], tensors["enc2a.b"])),
                        tensors["enc2b.w"], tensors["enc2b.b"]))
    f3 = _relu(_conv3x3(_relu(_conv3x3(_maxpool2(f2), tensors["bott_a.w"], tensors["bott_a.b"])),
                        tensors["bott_b.w"], tensors["bott_b.b"]))

    u2 = _relu(_conv3x3(_upsample2(f3), tensors["up2.w"], tensors["up2.b"]))
    d2 = _relu(_conv3x3(_relu(_conv3x3(np.concatenate([u2, f2], axis=0),
                                       tensors["dec2a.w"], tensors["dec2a.b"])),
                        tensors["dec2b.w"], tensors["dec2b.b"]))
    u1 = _relu(_conv3x3(_upsample2(d2), tensors["up1.w"], tensors["up1.b"]))
    d1 = _relu(_conv3x3(_relu(_conv3x3(np.concatenate([u1, f1], axis=0),
                                       tensors["dec1a.w"], tensors["dec1a.b"])),
                        tensors["dec1b.w"], tensors["dec1b.b"]))

    out = _softplus(_conv1x1(d1, tensors["head.w"], tensors["head.b"]))
    return out[0]


# ---------------------------------------------------------------------------
# bundle constructors (test fixtures and training initialization)

def _init_unet(rng: np.random.Generator, channels: tuple[int, int, int], scale: float) -> dict[str, np.ndarray]:
    tensors = {}
    for name, shape in layer_shapes(channels):
        if name.endswith(".b"):
            tensors[name] = np.zeros(shape, dtype=np.float32)
        else:
            fan_in = int(np.prod(shape[1:]))
            tensors[name] = (scale * rng.standard_normal(shape) / np.sqrt(fan_in)).astype(np.float32)
    return tensors


def random_bundle(k: int, n_hint: int, seed: int = 0, scale: float = 1.0,
                  channels: tuple[int, int, int] = DEFAULT_CHANNELS) -> WeightBundle:
    """Seeded He-style random weights, zero biases, t = 1."""
    rng = np.random.default_rng(seed)
    return WeightBundle(
        unets=[_init_unet(rng, channels, scale) for _ in range(k)],
        t=[1.0] * k,
        n_hint=n_hint,
        channels=channels,
    )


def zero_bundle(k: int, n_hint: int, channels: tuple[int, int, int] = DEFAULT_CHANNELS) -> WeightBundle:
    """All-zero weights and biases: every threshold map is softplus(0) = ln 2."""
    unets = [{name: np.zeros(shape, dtype=np.float32) for name, shape in layer_shapes(channels)}
             for _ in range(k)]
    return WeightBundle(unets=unets, t=[1.0] * k, n_hint=n_hint, channels=channels)
