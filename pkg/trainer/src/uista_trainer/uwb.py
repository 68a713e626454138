"""Writer/reader for the portable `.uwb` weight-bundle format.

Layout: magic ``UWB1``; little-endian u32 manifest length; JSON manifest
{version, K, N_hint, arch, flags, tensors:[{name, shape, dtype:"f32",
offset, len}], scalars:{t:[...]}}; then one contiguous blob of
little-endian float32 tensors, row-major, convolutions ordered
(out_channels, in_channels, kh, kw), biases (channels,).  Offsets are byte
offsets from the blob start.  Tensors are written per layer k ascending in
the fixed layer order below, so re-serialization is byte-identical across
implementations.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"UWB1"
VERSION = 1

LAYER_ORDER = (
    "enc1a.w", "enc1a.b", "enc1b.w", "enc1b.b",
    "enc2a.w", "enc2a.b", "enc2b.w", "enc2b.b",
    "bott_a.w", "bott_a.b", "bott_b.w", "bott_b.b",
    "up2.w", "up2.b", "dec2a.w", "dec2a.b", "dec2b.w", "dec2b.b",
    "up1.w", "up1.b", "dec1a.w", "dec1a.b", "dec1b.w", "dec1b.b",
    "head.w", "head.b",
)

FLAGS = {
    "normalize_input": True,
    "threshold_input": "pre",
    "scale_theta_by_input_max": True,
}


def write_uwb(path: str | Path, unets: list[dict[str, np.ndarray]], t: list[float],
              n_hint: int, channels=(16, 32, 64)) -> None:
    if len(unets) != len(t) or not unets:
        raise ValueError("need one step scalar per U-Net and at least one layer")
    tensors_meta = []
    blob = bytearray()
    for i, tensors in enumerate(unets):
        missing = [n for n in LAYER_ORDER if n not in tensors]
        if missing:
            raise ValueError(f"U-Net {i} is missing tensors {missing}")
        for name in LAYER_ORDER:
            arr = np.ascontiguousarray(tensors[name], dtype="<f4")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"tensor k{i}.{name} contains NaN/Inf")
            tensors_meta.append({
                "name": f"k{i}.{name}",
                "shape": list(arr.shape),
                "dtype": "f32",
                "offset": len(blob),
                "len": arr.size * 4,
            })
            blob += arr.tobytes()
    manifest = {
        "version": VERSION,
        "K": len(unets),
        "N_hint": int(n_hint),
        "arch": {
            "levels": 3,
            "channels": list(channels),
            "kernel": 3,
            "head": "softplus",
            "concat": "up_first",
            "activation": "relu",
        },
        "flags": dict(FLAGS),
        "tensors": tensors_meta,
        "scalars": {"t": [float(v) for v in t]},
    }
    manifest_bytes = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(manifest_bytes)))
        fh.write(manifest_bytes)
        fh.write(bytes(blob))


def read_uwb(path: str | Path) -> tuple[list[dict[str, np.ndarray]], list[float], dict]:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic")
    (mlen,) = struct.unpack("<I", raw[4:8])
    manifest = json.loads(raw[8 : 8 + mlen].decode("utf-8"))
    if manifest["version"] != VERSION:
        raise ValueError(f"{path}: unsupported version {manifest['version']}")
    blob = raw[8 + mlen :]
    expected = sum(t["len"] for t in manifest["tensors"])
    if len(blob) != expected:
        raise ValueError(f"{path}: blob holds {len(blob)} bytes, manifest expects {expected}")
    unets: list[dict[str, np.ndarray]] = [dict() for _ in range(manifest["K"])]
    for meta in manifest["tensors"]:
        prefix, layer = meta["name"].split(".", 1)
        arr = np.frombuffer(blob, dtype="<f4", count=meta["len"] // 4, offset=meta["offset"])
        unets[int(prefix[1:])][layer] = arr.reshape(tuple(meta["shape"])).copy()
    return unets, [float(v) for v in manifest["scalars"]["t"]], manifest
