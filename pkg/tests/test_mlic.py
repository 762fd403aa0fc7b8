"""Collection loading, light splits, and pixel sampling."""

import numpy as np
import pytest
from PIL import Image
from scipy import stats

from relightkit import mlic
from relightkit.errors import (
    DimensionMismatch,
    EmptyTrainSet,
    FractionOutOfRange,
    MalformedLpLine,
    MissingFile,
    NonHemisphericalLight,
)


def _write_frames(tmp_path, sizes, names=None):
    names = names or [f"img_{i}.png" for i in range(len(sizes))]
    for name, (h, w) in zip(names, sizes):
        data = np.full((h, w, 3), 128, dtype=np.uint8)
        Image.fromarray(data, mode="RGB").save(tmp_path / name)
    return names


def _write_lp(tmp_path, entries, count=None):
    lines = [str(len(entries) if count is None else count)]
    lines += entries
    path = tmp_path / "lights.lp"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestLoadMlic:
    def test_counts_preserved(self, tmp_path):
        names = _write_frames(tmp_path, [(4, 4)] * 3)
        lp = _write_lp(tmp_path, [f"{n} 0.0 0.0 1.0" for n in names])
        m = mlic.load_mlic(tmp_path, lp)
        assert m.n_lights == 3
        assert (m.height, m.width) == (4, 4)

    def test_unit_direction_kept_and_elevation(self, tmp_path):
        names = _write_frames(tmp_path, [(4, 4)])
        lp = _write_lp(tmp_path, [f"{names[0]} 0.6 0.8 0.0"])
        m = mlic.load_mlic(tmp_path, lp)
        np.testing.assert_allclose(m.lights[0], [0.6, 0.8, 0.0], atol=1e-12)
        assert m.light_directions()[0].elevation_deg == pytest.approx(0.0)

    def test_off_unit_direction_renormalized(self, tmp_path):
        # oracle: dividing by the computed norm
        vec = np.array([1.2, 0.8, 1.2])
        expected = vec / np.linalg.norm(vec)
        names = _write_frames(tmp_path, [(4, 4)])
        lp = _write_lp(tmp_path, [f"{names[0]} {vec[0]} {vec[1]} {vec[2]}"])
        m = mlic.load_mlic(tmp_path, lp)
        np.testing.assert_allclose(m.lights[0], expected, atol=1e-12)

    def test_double_length_vector_halved(self, tmp_path):
        names = _write_frames(tmp_path, [(4, 4)])
        lp = _write_lp(tmp_path, [f"{names[0]} 1.2 1.6 0.0"])
        m = mlic.load_mlic(tmp_path, lp)
        np.testing.assert_allclose(m.lights[0], [0.6, 0.8, 0.0], atol=1e-12)

    def test_channels_normalized(self, tmp_path):
        names = _write_frames(tmp_path, [(4, 4)])
        lp = _write_lp(tmp_path, [f"{names[0]} 0 0 1"])
        m = mlic.load_mlic(tmp_path, lp)
        np.testing.assert_allclose(m.images, 128 / 255.0)

    def test_missing_lp(self, tmp_path):
        with pytest.raises(MissingFile):
            mlic.load_mlic(tmp_path, tmp_path / "nope.lp")

    def test_missing_image(self, tmp_path):
        lp = _write_lp(tmp_path, ["ghost.png 0 0 1"])
        with pytest.raises(MissingFile):
            mlic.load_mlic(tmp_path, lp)

    def test_dimension_mismatch(self, tmp_path):
        names = _write_frames(tmp_path, [(4, 4), (5, 4)])
        lp = _write_lp(tmp_path, [f"{n} 0 0 1" for n in names])
        with pytest.raises(DimensionMismatch):
            mlic.load_mlic(tmp_path, lp)

    def test_malformed_line_reports_number(self, tmp_path):
        names = _write_frames(tmp_path, [(4, 4), (4, 4)])
        lp = _write_lp(tmp_path, [f"{names[0]} 0 0 1", f"{names[1]} 0 nan-ish"])
        with pytest.raises(MalformedLpLine) as err:
            mlic.load_mlic(tmp_path, lp)
        assert err.value.line_no == 3

    def test_below_horizon_rejected(self, tmp_path):
        names = _write_frames(tmp_path, [(4, 4)])
        lp = _write_lp(tmp_path, [f"{names[0]} 0.0 0.0 -1.0"])
        with pytest.raises(NonHemisphericalLight):
            mlic.load_mlic(tmp_path, lp)

    def test_count_mismatch_is_malformed(self, tmp_path):
        names = _write_frames(tmp_path, [(4, 4)])
        lp = _write_lp(tmp_path, [f"{names[0]} 0 0 1"], count=2)
        with pytest.raises(MalformedLpLine):
            mlic.load_mlic(tmp_path, lp)

    def test_lp_round_trip_six_decimals(self, tmp_path, rng):
        vecs = rng.normal(size=(8, 3))
        vecs[:, 2] = np.abs(vecs[:, 2]) + 0.05
        vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
        names = [f"f{i}.png" for i in range(8)]
        mlic.write_lp(tmp_path / "a.lp", names, vecs)
        names2, parsed = mlic.read_lp(tmp_path / "a.lp")
        mlic.write_lp(tmp_path / "b.lp", names2, parsed)
        _, parsed2 = mlic.read_lp(tmp_path / "b.lp")
        assert names2 == names
        np.testing.assert_allclose(parsed2, parsed, atol=1e-6)
        np.testing.assert_allclose(parsed, vecs, atol=1e-6)


class TestSplitByElevation:
    def _collection(self, elevations_deg):
        elev = np.radians(np.asarray(elevations_deg, dtype=float))
        lights = np.stack(
            [np.cos(elev), np.zeros_like(elev), np.sin(elev)], axis=1
        )
        images = np.zeros((len(elevations_deg), 2, 2, 3))
        return mlic.MLIC(images=images, lights=lights)

    def test_no_matches_gives_empty_test_not_error(self, caplog):
        m = self._collection([10, 30, 50, 70, 90])
        split = mlic.split_by_elevation(m, [20, 40, 60, 80], 5.0)
        assert split.test_indices.size == 0
        assert split.train_indices.size == 5

    def test_dome_plus_test_protocol(self, flat_mlic):
        # 49 dome + 20 test directions at 4 intermediate elevation rings
        split = mlic.split_by_elevation(flat_mlic, [20, 40, 60, 80], 5.0)
        assert split.train_indices.size == 49
        assert split.test_indices.size == 20

    def test_single_light_all_test_raises(self):
        m = self._collection([40])
        with pytest.raises(EmptyTrainSet):
            mlic.split_by_elevation(m, [40], 5.0)

    def test_partition_property(self, rng):
        for _ in range(20):
            elevs = rng.uniform(1, 90, size=12)
            m = self._collection(elevs)
            targets = rng.uniform(0, 90, size=3)
            split = mlic.split_by_elevation(m, targets, rng.uniform(1, 15))
            union = np.union1d(split.train_indices, split.test_indices)
            assert np.intersect1d(split.train_indices, split.test_indices).size == 0
            assert np.all(np.isin(union, np.arange(12)))


class TestSamplePixels:
    def test_full_fraction_is_identity(self, flat_mlic):
        s = mlic.sample_pixels(flat_mlic, 1.0, seed=0)
        assert len(s) == flat_mlic.height * flat_mlic.width
        assert len(np.unique(s.indices[:, 0] * flat_mlic.width + s.indices[:, 1])) == len(s)

    def test_regular_grid_step8_on_64(self):
        m = mlic.MLIC(images=np.zeros((1, 64, 64, 3)), lights=np.array([[0, 0, 1.0]]))
        s = mlic.sample_pixels(m, strategy="regular_grid", step=8)
        assert len(s) == 64  # one pixel per 8x8 tile = 1.56% of 4096
        assert s.fraction == pytest.approx(1 / 64)

    def test_seeded_determinism(self, flat_mlic):
        a = mlic.sample_pixels(flat_mlic, 0.25, seed=7)
        b = mlic.sample_pixels(flat_mlic, 0.25, seed=7)
        np.testing.assert_array_equal(a.indices, b.indices)

    def test_count_within_one_of_requested(self, flat_mlic, rng):
        total = flat_mlic.height * flat_mlic.width
        for fraction in rng.uniform(0.01, 1.0, size=10):
            s = mlic.sample_pixels(flat_mlic, float(fraction), seed=0)
            assert abs(len(s) - fraction * total) <= 1

    def test_fraction_out_of_range(self, flat_mlic):
        for bad in (0.0, -0.5, 1.5):
            with pytest.raises(FractionOutOfRange):
                mlic.sample_pixels(flat_mlic, bad)

    def test_uniformity_chi_squared(self):
        # accumulate 10^4 draws over many seeds, bin into a 4x4 grid
        m = mlic.MLIC(images=np.zeros((1, 64, 64, 3)), lights=np.array([[0, 0, 1.0]]))
        counts = np.zeros((4, 4))
        draws = 0
        for seed in range(100):
            s = mlic.sample_pixels(m, 100 / 4096, seed=seed)
            rows, cols = s.indices[:, 0] // 16, s.indices[:, 1] // 16
            np.add.at(counts, (rows, cols), 1)
            draws += len(s)
        assert draws == 10_000
        result = stats.chisquare(counts.ravel())
        assert result.pvalue > 0.001


class TestGatherTrainingRows:
    def test_single_pixel_three_lights(self):
        images = np.arange(3 * 2 * 2 * 3, dtype=float).reshape(3, 2, 2, 3) / 100
        lights = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1.0]])
        m = mlic.MLIC(images=images, lights=lights)
        split = mlic.SplitSpec(np.arange(3), np.array([], dtype=int))
        samples = mlic.PixelSampleSet(indices=np.array([[1, 0]]), fraction=0.25)
        table = mlic.gather_training_rows(m, samples, split)
        assert table.encoder_inputs().shape == (1, 9)
        assert table.lights_xy.shape == (3, 2)
        np.testing.assert_allclose(
            table.encoder_inputs()[0], images[:, 1, 0, :].ravel()
        )

    def test_full_image_49_lights(self, flat_mlic, dome_split):
        samples = mlic.sample_pixels(flat_mlic, 1.0, seed=0)
        table = mlic.gather_training_rows(flat_mlic, samples, dome_split)
        assert table.encoder_inputs().shape == (16 * 16, 147)

    def test_empty_sample_set(self, flat_mlic, dome_split):
        samples = mlic.PixelSampleSet(
            indices=np.empty((0, 2), dtype=int), fraction=0.0
        )
        table = mlic.gather_training_rows(flat_mlic, samples, dome_split)
        assert table.n_rows == 0

    def test_row_order_matches_samples(self, flat_mlic, dome_split):
        samples = mlic.sample_pixels(flat_mlic, 0.1, seed=3)
        table = mlic.gather_training_rows(flat_mlic, samples, dome_split)
        np.testing.assert_array_equal(table.pixel_indices, samples.indices)
        r, c = samples.indices[5]
        expected = flat_mlic.images[dome_split.train_indices, r, c, :].ravel()
        np.testing.assert_allclose(table.encoder_inputs()[5], expected)
