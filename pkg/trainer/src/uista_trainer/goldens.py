"""Golden inference vectors for cross-implementation verification.

Each golden is an (input TFD, per-layer threshold maps, final output)
triple computed by this component's forward pass.  The consumer derives the
observation from the input TFD with its own measurement operator, runs its
own inference, and compares everything to max-abs < 1e-4 (float32
tolerance).  All matrices are raw little-endian float32, column-major.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from .model import UnrolledNet
from .uwb import read_uwb


def model_from_uwb(path: str | Path, d_nu: int = 29, d_tau: int = 29) -> UnrolledNet:
    # the bundle carries weights and grid hint only; the sampling mask is a
    # model-level choice and must be supplied by the caller
    unets, t, manifest = read_uwb(path)
    n = int(manifest["N_hint"])
    channels = tuple(manifest["arch"]["channels"])
    model = UnrolledNet(k=len(unets), n=n, d_nu=d_nu, d_tau=d_tau, channels=channels)
    with torch.no_grad():
        model.t.copy_(torch.tensor(t))
        for k, tensors in enumerate(unets):
            net = model.unets[k]
            for name in ("enc1a", "enc1b", "enc2a", "enc2b", "bott_a", "bott_b",
                         "up2", "dec2a", "dec2b", "up1", "dec1a", "dec1b", "head"):
                getattr(net, name).weight.copy_(torch.from_numpy(tensors[f"{name}.w"]))
                getattr(net, name).bias.copy_(torch.from_numpy(tensors[f"{name}.b"]))
    model.eval()
    return model


def _save_f32(path: Path, mat: np.ndarray) -> None:
    path.write_bytes(np.asarray(mat).flatten(order="F").astype("<f4").tobytes())


def _golden_inputs(count: int, n: int, seed: int) -> list[np.ndarray]:
    """Zero input first, then random sparse nonnegative unit-peak TFDs."""
    rng = np.random.default_rng(seed)
    inputs = [np.zeros((n, n), dtype=np.float32)]
    while len(inputs) < count:
        mat = np.zeros((n, n), dtype=np.float32)
        k = int(rng.integers(20, 200))
        rows = rng.integers(0, n, size=k)
        cols = rng.integers(0, n, size=k)
        mat[rows, cols] = rng.uniform(0.05, 1.0, size=k).astype(np.float32)
        mat /= mat.max()
        inputs.append(mat)
    return inputs[:count]


def export_goldens(weights: str | Path | UnrolledNet, out_dir: str | Path,
                   count: int = 5, seed: int = 0, d_nu: int = 29, d_tau: int = 29) -> dict:
    """Write ``count`` golden triples and a manifest; returns the manifest."""
    model = weights if isinstance(weights, UnrolledNet) else model_from_uwb(weights, d_nu, d_tau)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n = model.n
    entries = []
    with torch.no_grad():
        for i, w_in in enumerate(_golden_inputs(count, n, seed)):
            a_block = model.op.forward(torch.from_numpy(w_in)[None, :, :])
            out, thetas = model(a_block, collect_thetas=True)
            _save_f32(out_dir / f"{i}.input.f32", w_in)
            for k, theta in enumerate(thetas):
                _save_f32(out_dir / f"{i}.theta{k}.f32", theta[0].numpy())
            _save_f32(out_dir / f"{i}.output.f32", out[0].numpy())
            entries.append({
                "index": i,
                "input": f"{i}.input.f32",
                "thetas": [f"{i}.theta{k}.f32" for k in range(model.k)],
                "output": f"{i}.output.f32",
            })
    manifest = {
        "count": count,
        "N": n,
        "K": model.k,
        "mask": {"d_nu": model.op.d_nu, "d_tau": model.op.d_tau},
        "seed": seed,
        "tolerance_max_abs": 1e-4,
        "goldens": entries,
    }
    (out_dir / "goldens.json").write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    return manifest
