"""Synthetic non-stationary test and training signals.

Mixtures of linear-FM and sinusoidal-FM components on N samples with a time
offset t0, an optional slowly varying amplitude envelope, and white Gaussian
noise added to the real mixture at a requested SNR before taking the
analytic associate.  Also constructs the single-bin-per-column ideal TFD used
as ground truth, and writes observation datasets for training.

Instantaneous-frequency laws (cycles/sample), with phases as implemented:

* LFM:  phase(n) = 2 pi (alpha (n^2 - t0^2) + f0 (n - t0)),  IF(n) = 2 alpha n + f0
* SFM:  phase(n) = c (n - t0) + beta sin(r (n - t0) - phi0) + const,
        IF(n) = (c + beta r cos(r (n - t0) - phi0)) / (2 pi)
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .measure import MaskSpec, MeasurementOp, apply_mask
from .tfcore import af_direct, analytic_signal

__all__ = [
    "ComponentSpec",
    "MixtureSpec",
    "am_envelope",
    "case_spec",
    "synthesize",
    "ideal_tfd",
    "make_dataset",
    "load_sample",
    "CASES",
]

AM_RATE = 0.0016  # envelope exp(-(AM_RATE*t - 1)^2 * pi)


def am_envelope(n: int) -> np.ndarray:
    t = np.arange(n, dtype=float)
    return np.exp(-((AM_RATE * t - 1.0) ** 2) * np.pi)


@dataclass(frozen=True)
class ComponentSpec:
    """One mixture component: linear or sinusoidal frequency modulation.

    LFM uses ``alpha`` (chirp rate, per sample^2) and ``f0`` (start
    frequency at n = t0, cycles/sample).  SFM uses carrier ``c`` and
    modulation rate ``r`` in radians/sample, dimensionless depth ``beta``
    and phase offset ``phi0``; ``phase_const`` overrides the constant phase
    term (default -beta sin(phi0)), which never affects any TFD magnitude.
    """

    kind: str  # "lfm" | "sfm"
    alpha: float = 0.0
    f0: float = 0.0
    c: float = 0.0
    beta: float = 0.0
    r: float = 0.0
    phi0: float = 0.0
    phase_const: float | None = None
    am: bool = True

    def __post_init__(self):
        if self.kind not in ("lfm", "sfm"):
            raise ValueError(f"unknown component kind {self.kind!r}")

    def phase(self, n_idx: np.ndarray, t0: float) -> np.ndarray:
        if self.kind == "lfm":
            return 2.0 * np.pi * (self.alpha * (n_idx**2 - t0**2) + self.f0 * (n_idx - t0))
        const = self.phase_const if self.phase_const is not None else -self.beta * np.sin(self.phi0)
        return self.c * (n_idx - t0) + self.beta * np.sin(self.r * (n_idx - t0) - self.phi0) + const

    def inst_freq(self, n_idx: np.ndarray, t0: float) -> np.ndarray:
        """Instantaneous frequency in cycles/sample."""
        if self.kind == "lfm":
            return 2.0 * self.alpha * n_idx + self.f0
        return (self.c + self.beta * self.r * np.cos(self.r * (n_idx - t0) - self.phi0)) / (2.0 * np.pi)


@dataclass(frozen=True)
class MixtureSpec:
    components: tuple[ComponentSpec, ...]
    n: int = 128
    t0: float = 64.0
    snr_db: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if self.n < 16 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"N must be a power of two >= 16, got {self.n}")
        if not (0 <= self.t0 < self.n):
            raise ValueError(f"t0 must lie in [0, N), got {self.t0}")
        if not self.components:
            raise ValueError("mixture needs at least one component")
        grid = np.arange(self.n, dtype=float)
        for i, comp in enumerate(self.components):
            f = comp.inst_freq(grid, self.t0)
            if f.min() < 0.0 or f.max() >= 0.5:
                raise ValueError(
                    f"component {i} ({comp.kind}) leaves the analytic band: "
                    f"IF range [{f.min():.4f}, {f.max():.4f}] not within [0, 0.5)"
                )

    def clean(self) -> "MixtureSpec":
        return MixtureSpec(self.components, self.n, self.t0, None)


# Five reference mixtures: far/close/crossing LFM pairs and LFM+SFM pairs.
# The printed start frequencies 133 and 211 are read as 0.133 and 0.211
# cycles/sample (anything else would alias far outside the analytic band).
CASES: dict[int, tuple[ComponentSpec, ...]] = {
    1: (
        ComponentSpec("lfm", alpha=0.0002, f0=0.441),
        ComponentSpec("lfm", alpha=0.0004, f0=0.133),
    ),
    2: (
        ComponentSpec("lfm", alpha=-0.0003, f0=0.3164),
        ComponentSpec("lfm", alpha=0.0001, f0=0.211),
    ),
    3: (
        ComponentSpec("lfm", alpha=-0.0006, f0=0.29),
        ComponentSpec("lfm", alpha=0.0011, f0=0.109),
    ),
    4: (
        ComponentSpec("lfm", alpha=0.0002, f0=0.297),
        ComponentSpec("sfm", c=0.27 * np.pi, beta=9.98, r=0.0156 * np.pi, phi0=-1.403),
    ),
    5: (
        ComponentSpec("lfm", alpha=-0.0004, f0=0.117),
        ComponentSpec(
            "sfm", c=0.42 * np.pi, beta=15.9, r=0.0156 * np.pi, phi0=-1.832,
            phase_const=-0.0156 * np.sin(-1.832),
        ),
    ),
}


def case_spec(case: int, n: int = 128, t0: float = 64.0, snr_db: float | None = None) -> MixtureSpec:
    if case not in CASES:
        raise ValueError(f"case must be in 1..5, got {case}")
    return MixtureSpec(CASES[case], n=n, t0=t0, snr_db=snr_db)


def _real_mixture(spec: MixtureSpec) -> np.ndarray:
    grid = np.arange(spec.n, dtype=float)
    env = am_envelope(spec.n)
    x = np.zeros(spec.n)
    for comp in spec.components:
        xc = np.cos(comp.phase(grid, spec.t0))
        if comp.am:
            xc = env * xc
        x += xc
    return x


def synthesize(spec: MixtureSpec, seed: int = 0) -> np.ndarray:
    """Analytic associate of the (optionally noisy) real mixture."""
    x = _real_mixture(spec)
    if spec.snr_db is not None:
        p_signal = float(np.mean(x**2))
        sigma = np.sqrt(p_signal / 10.0 ** (spec.snr_db / 10.0))
        rng = np.random.default_rng(seed)
        x = x + sigma * rng.standard_normal(spec.n)
    return analytic_signal(x)


def ideal_tfd(spec: MixtureSpec) -> np.ndarray:
    """Single-bin ridge ground truth: column n holds a(n)^2 at each IF bin."""
    n = spec.n
    grid = np.arange(n, dtype=float)
    env2 = am_envelope(n) ** 2
    out = np.zeros((n, n))
    for comp in spec.components:
        bins = np.mod(np.round(2.0 * comp.inst_freq(grid, spec.t0) * n).astype(int), n)
        amp = env2 if comp.am else np.ones(n)
        out[bins, np.arange(n)] += amp
    return out


# ---------------------------------------------------------------------------
# dataset generation

_LFM_F_RANGE = (0.05, 0.45)
_SFM_CENTER_RANGE = (0.1, 0.4)
_SFM_MAX_EXCURSION = 0.15


def _random_lfm(rng: np.random.Generator, n: int) -> ComponentSpec:
    f_start = rng.uniform(*_LFM_F_RANGE)
    f_end = rng.uniform(*_LFM_F_RANGE)
    return ComponentSpec("lfm", alpha=(f_end - f_start) / (2.0 * n), f0=f_start)


def _random_sfm(rng: np.random.Generator, n: int) -> ComponentSpec:
    center = rng.uniform(*_SFM_CENTER_RANGE)
    e_max = min(_SFM_MAX_EXCURSION, center - 0.02, 0.48 - center)
    excursion = rng.uniform(0.01, e_max)
    r = rng.uniform(0.01 * np.pi, 0.05 * np.pi)
    return ComponentSpec(
        "sfm", c=2.0 * np.pi * center, beta=2.0 * np.pi * excursion / r, r=r,
        phi0=rng.uniform(-np.pi, np.pi),
    )


def _components_overlap(a: ComponentSpec, b: ComponentSpec, n: int, t0: float) -> bool:
    grid = np.arange(n, dtype=float)
    gap = np.abs(a.inst_freq(grid, t0) - b.inst_freq(grid, t0))
    return bool(gap.min() < 1.0 / (2.0 * n))


def _random_mixture(rng: np.random.Generator, n: int, t0: float, snr_db: float,
                    force_overlap: bool | None) -> MixtureSpec:
    def draw() -> ComponentSpec:
        return _random_lfm(rng, n) if rng.uniform() < 0.5 else _random_sfm(rng, n)

    if force_overlap is None:
        return MixtureSpec((draw(),), n=n, t0=t0, snr_db=snr_db)
    first = draw()
    for _ in range(200):
        second = draw()
        if _components_overlap(first, second, n, t0) == force_overlap:
            break
    return MixtureSpec((first, second), n=n, t0=t0, snr_db=snr_db)


def _component_to_json(comp: ComponentSpec) -> dict:
    d = asdict(comp)
    return d


def _component_from_json(d: dict) -> ComponentSpec:
    return ComponentSpec(**d)


def spec_to_json(spec: MixtureSpec) -> dict:
    return {
        "components": [_component_to_json(c) for c in spec.components],
        "n": spec.n,
        "t0": spec.t0,
        "snr_db": spec.snr_db,
    }


def spec_from_json(d: dict) -> MixtureSpec:
    return MixtureSpec(
        tuple(_component_from_json(c) for c in d["components"]),
        n=int(d["n"]), t0=float(d["t0"]),
        snr_db=None if d.get("snr_db") is None else float(d["snr_db"]),
    )


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")


def make_dataset(count: int, snr_range: tuple[float, float], out_dir: str | Path,
                 seed: int = 0, n: int = 128, t0: float = 64.0,
                 mask: MaskSpec = MaskSpec(29, 29)) -> dict:
    """Write ``count`` (observation, ideal TFD, metadata) triples.

    Sample i gets ``<i>.json`` (metadata), ``<i>.obs`` (interleaved re/im
    float32 of the masked-AF observation) and ``<i>.ideal`` (float32, N^2,
    column-major).  Mixtures alternate through single components,
    non-overlapped pairs and overlapped pairs; all parameters are drawn
    uniformly from the documented ranges.  Byte-deterministic given
    (count, snr_range, seed).
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    op = MeasurementOp(n, mask)
    samples = []
    for i in range(count):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        snr_db = float(rng.uniform(snr_range[0], snr_range[1]))
        force_overlap = (None, False, True)[i % 3]
        spec = _random_mixture(rng, n, t0, snr_db, force_overlap)
        noise_seed = int(rng.integers(0, 2**31 - 1))
        z = synthesize(spec, seed=noise_seed)
        a_prime = apply_mask(af_direct(z), mask)
        ideal = ideal_tfd(spec.clean())

        obs = np.empty(2 * a_prime.size, dtype="<f4")
        obs[0::2] = a_prime.real
        obs[1::2] = a_prime.imag
        (out_dir / f"{i}.obs").write_bytes(obs.tobytes())
        (out_dir / f"{i}.ideal").write_bytes(ideal.flatten(order="F").astype("<f4").tobytes())
        meta = {
            "index": i,
            "spec": spec_to_json(spec),
            "seed": noise_seed,
            "snr_db": snr_db,
            "mask": {"d_nu": mask.d_nu, "d_tau": mask.d_tau},
            "N": n,
        }
        _write_json(out_dir / f"{i}.json", meta)
        samples.append({"index": i, "files": [f"{i}.json", f"{i}.obs", f"{i}.ideal"]})

    manifest = {
        "count": count,
        "snr_range": list(snr_range),
        "seed": seed,
        "N": n,
        "t0": t0,
        "mask": {"d_nu": mask.d_nu, "d_tau": mask.d_tau},
        "samples": samples,
    }
    _write_json(out_dir / "manifest.json", manifest)
    return manifest


def load_sample(dataset_dir: str | Path, index: int) -> tuple[np.ndarray, np.ndarray, dict]:
    """Read one dataset sample back: (a_prime, ideal TFD matrix, metadata)."""
    dataset_dir = Path(dataset_dir)
    meta = json.loads((dataset_dir / f"{index}.json").read_text())
    n = int(meta["N"])
    m = int(meta["mask"]["d_nu"]) * int(meta["mask"]["d_tau"])
    raw = np.frombuffer((dataset_dir / f"{index}.obs").read_bytes(), dtype="<f4")
    if raw.size != 2 * m:
        raise ValueError(f"observation file holds {raw.size} floats, expected {2 * m}")
    a_prime = raw[0::2].astype(float) + 1j * raw[1::2].astype(float)
    ideal_raw = np.frombuffer((dataset_dir / f"{index}.ideal").read_bytes(), dtype="<f4")
    if ideal_raw.size != n * n:
        raise ValueError(f"ideal file holds {ideal_raw.size} floats, expected {n * n}")
    ideal = ideal_raw.astype(float).reshape((n, n), order="F")
    return a_prime, ideal, meta
