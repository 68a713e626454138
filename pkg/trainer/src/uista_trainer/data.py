"""Dataset reader for the observation/ideal-TFD sample layout.

Each sample i in a dataset directory is ``<i>.json`` (metadata),
``<i>.obs`` (little-endian float32, interleaved re/im, the masked-AF
observation vectorized column-major) and ``<i>.ideal`` (little-endian
float32, N^2 values, column-major).  ``manifest.json`` lists the samples
and global parameters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass
class Sample:
    a_block: np.ndarray  # (d_nu, d_tau) complex64
    ideal: np.ndarray    # (n, n) float32
    meta: dict


@dataclass
class Dataset:
    samples: list[Sample]
    n: int
    d_nu: int
    d_tau: int

    def __len__(self) -> int:
        return len(self.samples)


def load_dataset(path: str | Path) -> Dataset:
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    n = int(manifest["N"])
    d_nu = int(manifest["mask"]["d_nu"])
    d_tau = int(manifest["mask"]["d_tau"])
    samples = []
    for entry in manifest["samples"]:
        i = entry["index"]
        meta = json.loads((path / f"{i}.json").read_text())
        if int(meta["N"]) != n or meta["mask"] != manifest["mask"]:
            raise ValueError(f"sample {i} disagrees with the manifest grid/mask")
        raw = np.frombuffer((path / f"{i}.obs").read_bytes(), dtype="<f4")
        m = d_nu * d_tau
        if raw.size != 2 * m:
            raise ValueError(f"sample {i}: observation holds {raw.size} floats, expected {2 * m}")
        a_vec = (raw[0::2] + 1j * raw[1::2]).astype(np.complex64)
        a_block = a_vec.reshape((d_nu, d_tau), order="F")
        ideal_raw = np.frombuffer((path / f"{i}.ideal").read_bytes(), dtype="<f4")
        if ideal_raw.size != n * n:
            raise ValueError(f"sample {i}: ideal TFD holds {ideal_raw.size} floats, expected {n * n}")
        ideal = ideal_raw.reshape((n, n), order="F").astype(np.float32)
        samples.append(Sample(a_block=a_block, ideal=ideal, meta=meta))
    return Dataset(samples=samples, n=n, d_nu=d_nu, d_tau=d_tau)
