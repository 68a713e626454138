"""Signal synthesis, ideal-TFD and dataset tests."""

import json

import numpy as np
import pytest

from tfsparse.measure import MaskSpec
from tfsparse.siggen import (CASES, ComponentSpec, MixtureSpec, am_envelope, case_spec,
                             ideal_tfd, load_sample, make_dataset, spec_from_json,
                             spec_to_json, synthesize)

N = 128


def test_case_specs_stay_in_band():
    for case in range(1, 6):
        spec = case_spec(case)
        grid = np.arange(N, dtype=float)
        for comp in spec.components:
            f = comp.inst_freq(grid, spec.t0)
            assert f.min() >= 0.0 and f.max() < 0.5, f"case {case}"


def test_out_of_band_component_is_rejected_by_index():
    comps = (ComponentSpec("lfm", alpha=0.0, f0=0.2),
             ComponentSpec("lfm", alpha=0.001, f0=0.45))
    with pytest.raises(ValueError, match="component 1"):
        MixtureSpec(comps)


def test_mixture_validation():
    with pytest.raises(ValueError, match="power of two"):
        MixtureSpec((ComponentSpec("lfm", f0=0.2),), n=100)
    with pytest.raises(ValueError, match="t0"):
        MixtureSpec((ComponentSpec("lfm", f0=0.2),), t0=200.0)
    with pytest.raises(ValueError, match="component kind"):
        ComponentSpec("chirp")


def test_zero_chirp_lfm_is_a_pure_tone():
    spec = MixtureSpec((ComponentSpec("lfm", alpha=0.0, f0=0.25, am=False),))
    z = synthesize(spec)
    expected = np.exp(2j * np.pi * 0.25 * (np.arange(N) - 64.0))
    assert np.abs(np.abs(z) - 1.0).max() < 1e-9
    assert np.abs(z - expected).max() < 1e-9


def test_sfm_instantaneous_frequency_matches_phase_derivative():
    comp = CASES[4][1]
    grid = np.arange(N, dtype=float)
    # the implemented frequency law is the derivative of the implemented phase
    fd_phase = (comp.phase(grid + 1e-4, 64.0) - comp.phase(grid - 1e-4, 64.0)) / (4e-4 * np.pi)
    assert np.abs(fd_phase - comp.inst_freq(grid, 64.0)).max() < 1e-6
    assert abs(comp.inst_freq(np.array([64.0]), 64.0)[0]
               - (0.135 + 0.0778 * np.cos(-comp.phi0))) < 1e-3
    # finite difference of the unwrapped analytic phase: the quadrature
    # ripple of the finite-length analytic transform floors the pointwise
    # error near 7e-3, so the sample-level check holds in median
    spec = MixtureSpec((ComponentSpec("sfm", c=comp.c, beta=comp.beta, r=comp.r,
                                      phi0=comp.phi0, am=False),))
    z = synthesize(spec)
    phase = np.unwrap(np.angle(z))
    if_fd = (phase[2:] - phase[:-2]) / (4.0 * np.pi)
    err = np.abs(if_fd - comp.inst_freq(grid[1:-1], spec.t0))
    assert np.median(err) < 1e-3
    assert np.percentile(err, 90) < 8e-3


def test_am_envelope_shape():
    env = am_envelope(N)
    assert np.all(np.diff(env) > 0)  # strictly increasing before the peak at 625
    assert np.argmax(env) == N - 1
    full = am_envelope(1024)
    assert np.argmax(full) == 625


def test_am_applies_per_component():
    spec = MixtureSpec((ComponentSpec("lfm", alpha=0.0, f0=0.25, am=True),))
    z = synthesize(spec)
    # analytic-envelope ripple at the window edges caps pointwise agreement
    assert np.abs(np.abs(z) - am_envelope(N)).max() < 0.05
    assert np.median(np.abs(np.abs(z) - am_envelope(N))) < 1e-3
    assert np.argmax(np.abs(z)) >= N - 4


def test_snr_calibration_within_two_tenths_db():
    # 400 seeds: the sample-noise-power spread is ~0.6 dB per draw, so a
    # 100-seed mean still moves by ~0.06 dB; 400 keeps the bound comfortable
    spec = case_spec(1)
    x_clean = synthesize(spec).real
    p_signal = np.mean(x_clean**2)
    for target in (5.0, 25.0):
        measured = []
        for seed in range(400):
            x_noisy = synthesize(case_spec(1, snr_db=target), seed=seed).real
            p_noise = np.mean((x_noisy - x_clean) ** 2)
            measured.append(10.0 * np.log10(p_signal / p_noise))
        assert abs(np.mean(measured) - target) < 0.2, f"snr {target}"


def test_analytic_band_limit():
    for case in range(1, 6):
        z = synthesize(case_spec(case, snr_db=10.0), seed=case)
        spec = np.abs(np.fft.fft(z)) ** 2
        assert spec[: N // 2].sum() / spec.sum() >= 0.99, f"case {case}"


def test_determinism():
    a = synthesize(case_spec(2, snr_db=15.0), seed=42)
    b = synthesize(case_spec(2, snr_db=15.0), seed=42)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, synthesize(case_spec(2, snr_db=15.0), seed=43))


class TestIdealTFD:
    def test_constant_tone_ridge(self):
        spec = MixtureSpec((ComponentSpec("lfm", alpha=0.0, f0=0.25, am=False),))
        tfd = ideal_tfd(spec)
        assert np.array_equal(tfd[64, :], np.ones(N))
        tfd[64, :] = 0.0
        assert not tfd.any()

    def test_case1_has_two_disjoint_ridges(self):
        tfd = ideal_tfd(case_spec(1))
        assert np.count_nonzero(tfd) == 2 * N

    def test_case3_crossing_columns_add(self):
        spec = case_spec(3)
        tfd = ideal_tfd(spec)
        grid = np.arange(N, dtype=float)
        c1, c2 = spec.components
        bins1 = np.round(2 * N * c1.inst_freq(grid, spec.t0)).astype(int) % N
        bins2 = np.round(2 * N * c2.inst_freq(grid, spec.t0)).astype(int) % N
        collide = bins1 == bins2
        assert collide.any()
        gap = np.abs(c1.inst_freq(grid, spec.t0) - c2.inst_freq(grid, spec.t0))
        assert np.all(gap[collide] < 1.0 / (2 * N))
        env2 = am_envelope(N) ** 2
        for n in np.where(collide)[0]:
            assert tfd[bins1[n], n] == pytest.approx(2.0 * env2[n])
        assert np.count_nonzero(tfd) == 2 * N - collide.sum()

    def test_nonnegative(self):
        for case in range(1, 6):
            assert ideal_tfd(case_spec(case)).min() >= 0.0


class TestDataset:
    def test_rejects_empty(self, tmp_path):
        with pytest.raises(ValueError, match="count"):
            make_dataset(0, (5.0, 25.0), tmp_path)

    def test_sample_layout(self, tmp_path):
        manifest = make_dataset(1, (45.0, 45.0), tmp_path / "d", seed=3)
        assert manifest["count"] == 1
        a_prime, ideal, meta = load_sample(tmp_path / "d", 0)
        assert a_prime.shape == (841,)  # 29 x 29 mask
        assert ideal.shape == (N, N)
        assert meta["snr_db"] == pytest.approx(45.0)
        assert meta["mask"] == {"d_nu": 29, "d_tau": 29}
        raw = (tmp_path / "d" / "0.obs").read_bytes()
        assert len(raw) == 2 * 841 * 4

    def test_byte_determinism(self, tmp_path):
        make_dataset(4, (5.0, 25.0), tmp_path / "a", seed=9)
        make_dataset(4, (5.0, 25.0), tmp_path / "b", seed=9)
        for i in range(4):
            for ext in ("json", "obs", "ideal"):
                fa = (tmp_path / "a" / f"{i}.{ext}").read_bytes()
                fb = (tmp_path / "b" / f"{i}.{ext}").read_bytes()
                assert fa == fb, f"{i}.{ext}"
        assert ((tmp_path / "a" / "manifest.json").read_bytes()
                == (tmp_path / "b" / "manifest.json").read_bytes())

    def test_mixture_variety(self, tmp_path):
        make_dataset(6, (5.0, 25.0), tmp_path / "d", seed=1)
        n_components = []
        for i in range(6):
            meta = json.loads((tmp_path / "d" / f"{i}.json").read_text())
            n_components.append(len(meta["spec"]["components"]))
        assert 1 in n_components and 2 in n_components

    def test_spec_json_round_trip(self):
        spec = case_spec(4, snr_db=12.5)
        back = spec_from_json(spec_to_json(spec))
        assert back == spec
