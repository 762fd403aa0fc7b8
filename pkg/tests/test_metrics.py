"""Quality metrics against closed forms and reference implementations."""

import math

import numpy as np
import pytest

from relightkit import metrics
from relightkit.errors import DimensionMismatch, ImageTooSmall


def _gradient_patch(h=32, w=32):
    img = np.linspace(0.0, 1.0, w)[None, :, None] * np.ones((h, 1, 3))
    return img


class TestPsnr:
    def test_identical_images_are_infinite(self, rng):
        img = rng.uniform(0, 1, (8, 8, 3))
        assert math.isinf(metrics.psnr(img, img))

    def test_zeros_vs_ones_is_zero_db(self):
        assert metrics.psnr(np.zeros((4, 4, 3)), np.ones((4, 4, 3))) == 0.0

    def test_uniform_error_point_one_is_twenty_db(self):
        a = np.full((4, 4, 3), 0.5)
        b = np.full((4, 4, 3), 0.6)
        assert metrics.psnr(a, b) == pytest.approx(20.0, abs=1e-9)

    def test_monotone_in_noise_amplitude(self, rng):
        base = np.full((16, 16, 3), 0.5)
        values = []
        for amp in (0.02, 0.05, 0.1, 0.2, 0.3):
            noisy = base + rng.uniform(-amp, amp, base.shape)
            values.append(metrics.psnr(base, np.clip(noisy, 0, 1)))
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            metrics.psnr(np.zeros((4, 4, 3)), np.zeros((4, 5, 3)))

    def test_symmetric(self, rng):
        a, b = rng.uniform(0, 1, (2, 8, 8, 3))
        assert abs(metrics.psnr(a, b) - metrics.psnr(b, a)) < 1e-10


class TestSsim:
    def test_identical_images(self, rng):
        img = rng.uniform(0, 1, (16, 16, 3))
        assert metrics.ssim(img, img) == pytest.approx(1.0, abs=1e-12)

    def test_negated_gradient_patch_below_half(self):
        img = _gradient_patch()
        assert metrics.ssim(img, 1.0 - img) < 0.5

    def test_constant_pair_is_one(self):
        img = np.full((16, 16, 3), 0.3)
        assert metrics.ssim(img, img.copy()) == pytest.approx(1.0, abs=1e-12)

    def test_too_small_image(self):
        small = np.zeros((8, 8, 3))
        with pytest.raises(ImageTooSmall):
            metrics.ssim(small, small)

    def test_symmetric(self, rng):
        a, b = rng.uniform(0, 1, (2, 24, 24, 3))
        assert abs(metrics.ssim(a, b) - metrics.ssim(b, a)) < 1e-10

    def test_matches_reference_implementation(self, rng):
        # oracle: scikit-image with the same window settings on luminance
        skimage = pytest.importorskip("skimage.metrics")
        a = rng.uniform(0, 1, (32, 40, 3))
        b = np.clip(a + rng.normal(0, 0.1, a.shape), 0, 1)
        lum_a = a @ metrics.REC709_WEIGHTS
        lum_b = b @ metrics.REC709_WEIGHTS
        reference = skimage.structural_similarity(
            lum_a,
            lum_b,
            gaussian_weights=True,
            sigma=1.5,
            use_sample_covariance=False,
            data_range=1.0,
            win_size=11,
        )
        assert metrics.ssim(a, b) == pytest.approx(reference, abs=2e-4)


class TestDeltaE:
    def test_identical_is_zero(self, rng):
        img = rng.uniform(0, 1, (8, 8, 3))
        assert metrics.delta_e(img, img) == 0.0

    def test_white_vs_black_is_hundred(self):
        white = np.ones((4, 4, 3))
        black = np.zeros((4, 4, 3))
        assert metrics.delta_e(white, black) == pytest.approx(100.0, abs=0.01)

    def test_one_step_gray_below_jnd(self):
        a = np.full((4, 4, 3), 128 / 255.0)
        b = a.copy()
        b[..., 0] += 1 / 255.0
        assert metrics.delta_e(a, b) < 1.0

    def test_lab_matches_reference(self, rng):
        # oracle: scikit-image's D65 sRGB -> Lab conversion
        color = pytest.importorskip("skimage.color")
        img = rng.uniform(0, 1, (6, 6, 3))
        np.testing.assert_allclose(
            metrics.rgb_to_lab(img), color.rgb2lab(img), atol=0.02
        )

    def test_translation_detected(self, rng):
        img = rng.uniform(0, 1, (16, 16, 3))
        shifted = np.roll(img, 1, axis=1)
        assert metrics.delta_e(img, shifted) > 0.0

    def test_symmetric(self, rng):
        a, b = rng.uniform(0, 1, (2, 8, 8, 3))
        assert abs(metrics.delta_e(a, b) - metrics.delta_e(b, a)) < 1e-10


class TestQualityReport:
    def _report(self, rng):
        from relightkit.mlic import LightDirection

        report = metrics.QualityReport()
        gt = rng.uniform(0, 1, (16, 16, 3))
        for i in range(3):
            pred = np.clip(gt + rng.normal(0, 0.02 * (i + 1), gt.shape), 0, 1)
            report.add(LightDirection(0.1 * i, 0.0, 1.0), pred, gt)
        return report

    def test_aggregates_are_means(self, rng):
        report = self._report(rng)
        rows = report.to_rows()
        assert report.mean_psnr == pytest.approx(
            np.mean([r["psnr_db"] for r in rows])
        )
        assert report.mean_ssim == pytest.approx(np.mean([r["ssim"] for r in rows]))

    def test_csv_and_json_round_out(self, rng, tmp_path):
        import csv
        import json

        report = self._report(rng)
        report.write_csv(tmp_path / "m.csv")
        report.write_json(tmp_path / "m.json")
        with open(tmp_path / "m.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 3
        obj = json.loads((tmp_path / "m.json").read_text())
        assert obj["delta_e_formula"] == "cie76"
        assert len(obj["per_direction"]) == 3

    def test_infinite_psnr_serializes(self, tmp_path, rng):
        import json

        from relightkit.mlic import LightDirection

        report = metrics.QualityReport()
        img = rng.uniform(0, 1, (16, 16, 3))
        report.add(LightDirection(0, 0, 1), img, img)
        assert math.isinf(report.mean_psnr)
        report.write_json(tmp_path / "m.json")
        obj = json.loads((tmp_path / "m.json").read_text())
        assert obj["per_direction"][0]["psnr_db"] is None
        assert obj["per_direction"][0]["psnr_infinite"] is True
