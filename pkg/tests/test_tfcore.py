"""Wigner-Ville / ambiguity-function transform tests."""

import numpy as np
import pytest

from tfsparse import tfcore
from tfsparse.measure import MaskSpec
from tfsparse.siggen import am_envelope, case_spec, synthesize

N = 128


def tone(f0: float, n: int = N) -> np.ndarray:
    return np.exp(2j * np.pi * f0 * np.arange(n))


def test_tone_wvd_peaks_on_its_bin():
    w = tfcore.wvd(tone(0.25))
    interior = range(N // 4, 3 * N // 4)
    for col in interior:
        assert np.argmax(w[:, col]) == 64
    # finite-duration leakage caps the +-1-bin energy fraction near 0.88 at
    # the worst interior column (direct evaluation; the Dirichlet sidelobes
    # of the shortened lag windows own the rest)
    fracs = []
    for col in interior:
        e = w[:, col] ** 2
        fracs.append(e[63:66].sum() / e.sum())
    assert min(fracs) > 0.88
    assert np.median(fracs) > 0.90


def test_wvd_of_zero_signal_is_zero():
    assert np.array_equal(tfcore.wvd(np.zeros(N, dtype=complex)), np.zeros((N, N)))


def test_two_tone_cross_term_sits_at_mid_frequency_and_oscillates():
    f1, f2 = 0.15, 0.35
    w = tfcore.wvd(tone(f1) + tone(f2))
    mid_bin = round((f1 + f2) * N)  # 2 * (f1+f2)/2 * N
    auto_bin = round(2 * f1 * N)
    interior = slice(N // 4, 3 * N // 4)
    assert np.abs(w[mid_bin, interior]).max() > 0.5 * np.abs(w[auto_bin, interior]).max()
    # the cross ridge is modulated at f1 - f2 cycles/sample along time
    spectrum = np.abs(np.fft.fft(w[mid_bin, :]))
    assert np.argmax(spectrum[1 : N // 2]) + 1 in (25, 26)  # (f2-f1)*N = 25.6


def test_wvd_columns_integrate_to_instantaneous_power():
    z = synthesize(case_spec(1), seed=0)
    w = tfcore.wvd(z)
    power = np.abs(z) ** 2
    assert np.allclose(w.sum(axis=0) / N, power, rtol=1e-11, atol=1e-13)


def test_wvd_scaling_is_quadratic():
    z = synthesize(case_spec(4), seed=1)
    w = tfcore.wvd(z)
    assert np.array_equal(tfcore.wvd(2.0 * z), 4.0 * w)
    assert np.allclose(tfcore.wvd(1.7 * z), 1.7**2 * w, rtol=1e-12)


def test_wvd_warns_on_non_analytic_input():
    x = np.cos(2 * np.pi * 0.2 * np.arange(N)) + 0j
    with pytest.warns(UserWarning, match="not analytic"):
        tfcore.wvd(x)


def test_af_origin_equals_signal_energy():
    for case in (1, 3, 5):
        z = synthesize(case_spec(case), seed=2)
        a = tfcore.af_direct(z)
        energy = np.sum(np.abs(z) ** 2)
        assert abs(a[N // 2, N // 2] - energy) <= 1e-9 * energy


def test_af_hermitian_symmetry():
    z = synthesize(case_spec(2, snr_db=10.0), seed=3)
    a_raw = np.fft.ifftshift(tfcore.af_direct(z))
    idx = (-np.arange(N)) % N
    reflected = a_raw[np.ix_(idx, idx)]
    assert np.abs(a_raw - np.conj(reflected)).max() <= 1e-9 * np.abs(a_raw).max()


def test_af_round_trip_is_exact():
    z = synthesize(case_spec(3), seed=4)
    w = tfcore.wvd(z)
    w2 = tfcore.wvd_from_af(tfcore.af_from_wvd(w))
    assert np.abs(w2 - w).max() <= 1e-12 * np.abs(w).max()


def test_af_direct_matches_af_from_wvd():
    for case in (1, 4):
        z = synthesize(case_spec(case, snr_db=20.0), seed=5)
        a1 = tfcore.af_direct(z)
        a2 = tfcore.af_from_wvd(tfcore.wvd(z))
        assert np.abs(a1 - a2).max() <= 1e-9 * np.abs(a1).max()
    assert np.array_equal(tfcore.af_direct(np.zeros(N, complex)), np.zeros((N, N), complex))


def test_tone_af_concentrates_on_zero_doppler_row():
    a = np.abs(tfcore.af_direct(tone(0.25)))
    row_mass = a.sum(axis=1)
    assert np.argmax(row_mass) == N // 2
    assert row_mass[N // 2] / row_mass.sum() > 0.19  # measured 0.1996


def test_impulse_tfd_has_flat_af():
    w = np.zeros((N, N))
    w[37, 91] = 1.0
    a = tfcore.af_from_wvd(w)
    assert np.allclose(np.abs(a), 1.0 / N, atol=1e-12)


def test_autoterm_mask_concentration():
    # single clean LFM: its AF ridge runs through the origin along the lag
    # axis, so the centered 29x29 block holds ~24% of sum|A| (measured; the
    # ridge spans the full lag range) but dominates any Doppler-offset block
    # of the same size by a wide margin.
    t = np.arange(N, dtype=float)
    phase = 2 * np.pi * (0.0002 * (t**2 - 64.0**2) + 0.441 * (t - 64.0))
    z = tfcore.analytic_signal(am_envelope(N) * np.cos(phase))
    mag = np.abs(tfcore.af_direct(z))
    rows, cols = MaskSpec(29, 29).slices(N)
    origin_frac = mag[rows, cols].sum() / mag.sum()
    assert origin_frac > 0.20
    for off in (20, 35, 49):
        shifted = mag[rows.start + off : rows.stop + off, cols]
        assert origin_frac > 5.0 * shifted.sum() / mag.sum()


def test_matrix_serialization_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    w = rng.standard_normal((N, N))
    tfcore.save_matrix(tmp_path / "w.f32", w, kind="tfd")
    back, sidecar = tfcore.load_matrix(tmp_path / "w.f32")
    assert sidecar == {"N": N, "kind": "tfd", "complex": False, "convention": "unitary-centered-v1"}
    assert np.allclose(back, w, atol=1e-6)

    a = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    tfcore.save_matrix(tmp_path / "a.f32", a, kind="af")
    back_a, sidecar_a = tfcore.load_matrix(tmp_path / "a.f32")
    assert sidecar_a["complex"] is True
    assert np.allclose(back_a, a, atol=1e-5)
