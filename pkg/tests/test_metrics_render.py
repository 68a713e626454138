"""NMSE metric and log-amplitude rendering tests."""

import math
from pathlib import Path

import numpy as np
import pytest

from tfsparse.metrics import max_normalize, nmse_db
from tfsparse.render import render_pgm, to_gray
from tfsparse.siggen import case_spec, ideal_tfd

DATA = Path(__file__).parent / "data"


class TestNMSE:
    def test_perfect_match_is_minus_infinity(self):
        ref = np.ones((4, 4))
        assert nmse_db(ref.copy(), ref) == -np.inf

    def test_zero_estimate_is_zero_db(self):
        ref = np.random.default_rng(0).standard_normal((8, 8))
        assert nmse_db(np.zeros((8, 8)), ref) == pytest.approx(0.0, abs=1e-12)

    def test_half_scale_is_minus_six_db(self):
        ref = np.random.default_rng(1).standard_normal((8, 8))
        assert nmse_db(0.5 * ref, ref) == pytest.approx(10.0 * math.log10(0.25), abs=1e-12)

    def test_sign_flip_symmetry(self):
        rng = np.random.default_rng(2)
        ref = rng.standard_normal((8, 8))
        err = rng.standard_normal((8, 8))
        assert nmse_db(ref + err, ref) == pytest.approx(nmse_db(ref - err, ref))

    def test_errors(self):
        with pytest.raises(ValueError, match="zero energy"):
            nmse_db(np.ones((2, 2)), np.zeros((2, 2)))
        with pytest.raises(ValueError, match="shape"):
            nmse_db(np.ones((2, 2)), np.ones((3, 3)))

    def test_max_normalize(self):
        m = np.array([[2.0, -4.0], [1.0, 0.0]])
        assert np.allclose(max_normalize(m), m / 4.0)
        z = np.zeros((3, 3))
        assert np.array_equal(max_normalize(z), z)


class TestRender:
    def test_delta_matrix_single_white_pixel(self, tmp_path):
        mat = np.zeros((8, 8))
        mat[5, 3] = 1.0
        gray = to_gray(mat)
        assert gray[8 - 1 - 5, 3] == 255  # frequency increases upward
        gray[8 - 1 - 5, 3] = 0
        assert not gray.any()

    def test_dynamic_range_clamp(self):
        gray = to_gray(np.array([[1.0, 0.1, 0.01]]))
        assert gray[0, 0] == 255
        assert gray[0, 1] == 0  # exactly -20 dB maps to the bottom gray level
        assert gray[0, 2] == 0  # clamped at -20 dB too

    def test_all_zero_matrix_warns_black(self):
        with pytest.warns(UserWarning, match="all-zero"):
            gray = to_gray(np.zeros((4, 4)))
        assert not gray.any()

    def test_render_idempotent_bytes(self, tmp_path):
        mat = np.random.default_rng(3).standard_normal((16, 16))
        render_pgm(mat, tmp_path / "a.pgm")
        render_pgm(mat, tmp_path / "b.pgm")
        assert (tmp_path / "a.pgm").read_bytes() == (tmp_path / "b.pgm").read_bytes()

    def test_pgm_header(self, tmp_path):
        render_pgm(np.eye(16), tmp_path / "a.pgm")
        raw = (tmp_path / "a.pgm").read_bytes()
        assert raw.startswith(b"P5\n16 16\n255\n")
        assert len(raw) == 13 + 256

    def test_case1_ideal_matches_golden(self, tmp_path):
        render_pgm(ideal_tfd(case_spec(1)), tmp_path / "case1.pgm")
        assert (tmp_path / "case1.pgm").read_bytes() == (DATA / "case1_ideal.pgm").read_bytes()

    def test_png_optional(self, tmp_path):
        pil = pytest.importorskip("PIL")
        from tfsparse.render import render_png

        render_png(np.eye(16), tmp_path / "a.png")
        from PIL import Image

        img = Image.open(tmp_path / "a.png")
        assert img.size == (16, 16)
        assert np.asarray(img)[15, 0] == 255
