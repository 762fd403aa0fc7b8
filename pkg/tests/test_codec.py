"""Relightable container: quantization, round trips, validation, decode."""

import json

import numpy as np
import pytest

from relightkit import codec, neural, nn
from relightkit.errors import (
    CountMismatch,
    MissingFile,
    NonFiniteLatent,
    PlaneDimensionMismatch,
    SchemaViolation,
)
from relightkit.mlic import LightDirection
from relightkit.neural import LatentImage


def _random_latent(rng, h=12, w=10, k=9):
    return LatentImage(codes=rng.normal(0, 1.5, size=(h, w, k)))


def _random_file(rng, tmp_path, width=20, h=12, w=10):
    latent = _random_latent(rng, h, w)
    planes, quant = codec.quantize(latent)
    decoder = nn.build_network(
        [11, width, width, 3], ["elu", "elu", "identity"], seed=5
    )
    out = tmp_path / "packed"
    codec.write_relightable(
        decoder, quant, planes, {"method": "disk-neuralrti", "lights_trained": 49}, out
    )
    return out, latent, decoder


class TestQuantize:
    def test_constant_feature_degenerate_range(self):
        latent = LatentImage(codes=np.full((4, 4, 9), 0.7))
        planes, quant = codec.quantize(latent)
        assert not planes.any()
        np.testing.assert_allclose(quant.offsets, 0.7)
        np.testing.assert_allclose(quant.scales, 1.0)

    def test_span_endpoints(self):
        codes = np.zeros((2, 2, 9))
        codes[0, 0, :] = -1.0
        codes[1, 1, :] = 1.0
        planes, quant = codec.quantize(LatentImage(codes=codes))
        assert (planes[0, 0] == 0).all()
        assert (planes[1, 1] == 255).all()

    def test_round_trip_error_bounded_by_half_scale(self, rng):
        latent = _random_latent(rng, 32, 32)
        planes, quant = codec.quantize(latent)
        restored = codec.dequantize(planes, quant)
        err = np.abs(restored - latent.codes)
        assert np.all(err <= quant.scales / 2 + 1e-12)

    def test_non_finite_rejected(self):
        codes = np.zeros((2, 2, 9))
        codes[0, 0, 0] = np.nan
        with pytest.raises(NonFiniteLatent):
            codec.quantize(LatentImage(codes=codes))


class TestWriteRead:
    def test_round_trip_byte_identical(self, rng, tmp_path):
        out, _, _ = _random_file(rng, tmp_path)
        first = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
        packed = codec.read_relightable(out)
        out2 = tmp_path / "rewritten"
        codec.write_relightable(
            packed.decoder,
            packed.quant,
            packed.planes,
            {"method": packed.method, "lights_trained": packed.lights_trained},
            out2,
        )
        second = {p.name: p.read_bytes() for p in sorted(out2.iterdir())}
        assert first == second

    def test_n20_decoder_weight_totals(self, rng, tmp_path):
        out, _, _ = _random_file(rng, tmp_path, width=20)
        header = json.loads((out / "info.json").read_text())
        assert sum(len(w) for w in header["decoder"]["weights"]) == 680
        assert sum(len(b) for b in header["decoder"]["biases"]) == 43

    def test_missing_key_names_it(self, rng, tmp_path):
        out, _, _ = _random_file(rng, tmp_path)
        header = json.loads((out / "info.json").read_text())
        del header["quant"]
        (out / "info.json").write_text(json.dumps(header))
        with pytest.raises(SchemaViolation, match="quant"):
            codec.read_relightable(out)

    def test_wrong_weight_count(self, rng, tmp_path):
        out, _, _ = _random_file(rng, tmp_path)
        header = json.loads((out / "info.json").read_text())
        header["decoder"]["weights"][0] = header["decoder"]["weights"][0][:-1]
        (out / "info.json").write_text(json.dumps(header))
        with pytest.raises(CountMismatch):
            codec.read_relightable(out)

    def test_wrong_plane_size(self, rng, tmp_path):
        out, _, _ = _random_file(rng, tmp_path)
        header = json.loads((out / "info.json").read_text())
        header["width"] += 1
        (out / "info.json").write_text(json.dumps(header))
        with pytest.raises(PlaneDimensionMismatch):
            codec.read_relightable(out)

    def test_unknown_method(self, rng, tmp_path):
        out, _, _ = _random_file(rng, tmp_path)
        header = json.loads((out / "info.json").read_text())
        header["method"] = "mystery-codec"
        (out / "info.json").write_text(json.dumps(header))
        with pytest.raises(SchemaViolation):
            codec.read_relightable(out)

    def test_missing_plane_file(self, rng, tmp_path):
        out, _, _ = _random_file(rng, tmp_path)
        (out / "plane_1.png").unlink()
        with pytest.raises(MissingFile):
            codec.read_relightable(out)

    def test_planes_bit_identical_after_read(self, rng, tmp_path):
        out, latent, _ = _random_file(rng, tmp_path)
        planes, _ = codec.quantize(latent)
        packed = codec.read_relightable(out)
        np.testing.assert_array_equal(packed.planes, planes)


class TestCpuRelight:
    def test_matches_in_memory_within_quantization(self, trained_setup, tmp_path):
        m, split, model, latent = trained_setup
        out = tmp_path / "packed"
        planes, quant = codec.quantize(latent)
        codec.write_relightable(
            model.decoder, quant, planes,
            {"method": "neuralrti", "lights_trained": split.train_indices.size},
            out,
        )
        packed = codec.read_relightable(out)
        light = LightDirection(0.35, -0.2, float(np.sqrt(1 - 0.1225 - 0.04)))
        from_file = codec.cpu_relight_file(packed, light)
        in_memory = np.clip(neural.relight_image(latent, model.decoder, light), 0, 1)
        assert np.abs(from_file - in_memory).max() <= 2.0 / 255.0

    def test_constant_latent_scale_invariant(self, tmp_path):
        latent = LatentImage(codes=np.full((8, 8, 9), 0.4))
        planes, quant = codec.quantize(latent)
        decoder = nn.build_network([11, 10, 10, 3], ["elu", "elu", "identity"], seed=0)
        out = tmp_path / "packed"
        codec.write_relightable(
            decoder, quant, planes, {"method": "neuralrti", "lights_trained": 1}, out
        )
        packed = codec.read_relightable(out)
        light = LightDirection(0.1, 0.2, float(np.sqrt(1 - 0.05)))
        full = codec.cpu_relight_file(packed, light, scale=1)
        half = codec.cpu_relight_file(packed, light, scale=2)
        np.testing.assert_array_equal(full, half)

    def test_deterministic(self, rng, tmp_path):
        out, _, _ = _random_file(rng, tmp_path)
        packed = codec.read_relightable(out)
        light = LightDirection(0.0, 0.0, 1.0)
        a = codec.cpu_relight_file(packed, light)
        b = codec.cpu_relight_file(packed, light)
        np.testing.assert_array_equal(a, b)

    def test_scale_subsamples_and_upscales(self, rng, tmp_path):
        out, _, _ = _random_file(rng, tmp_path, h=9, w=7)
        packed = codec.read_relightable(out)
        light = LightDirection(0.2, 0.0, float(np.sqrt(0.96)))
        img = codec.cpu_relight_file(packed, light, scale=2)
        assert img.shape == (9, 7, 3)
        full = codec.cpu_relight_file(packed, light, scale=1)
        np.testing.assert_allclose(img[::2, ::2], full[::2, ::2], atol=1e-12)


class TestClassicalContainer:
    def test_ptm_round_trip(self, rng, tmp_path):
        from relightkit.classical import PTMMap

        fit = PTMMap(
            poly=rng.normal(size=(6, 5, 6)),
            chroma=np.abs(rng.normal(size=(6, 5, 3))) + 0.1,
            black_mask=np.zeros((6, 5), dtype=bool),
        )
        out = codec.write_classical_map(fit, tmp_path / "ptm")
        restored = codec.read_classical_map(out)
        np.testing.assert_allclose(restored.poly, fit.poly, atol=1e-6)
        np.testing.assert_allclose(restored.chroma, fit.chroma, atol=1e-6)

    def test_hsh_round_trip(self, rng, tmp_path):
        from relightkit.classical import HSHMap

        fit = HSHMap(coeffs=rng.normal(size=(4, 4, 3, 9)), order=3)
        out = codec.write_classical_map(fit, tmp_path / "hsh")
        restored = codec.read_classical_map(out)
        assert restored.order == 3
        np.testing.assert_allclose(restored.coeffs, fit.coeffs, atol=1e-6)

    def test_read_any_dispatches(self, rng, tmp_path):
        from relightkit.classical import HSHMap

        neural_dir, _, _ = _random_file(rng, tmp_path)
        hsh_dir = codec.write_classical_map(
            HSHMap(coeffs=rng.normal(size=(4, 4, 3, 9)), order=3), tmp_path / "hsh"
        )
        assert isinstance(codec.read_any(neural_dir), codec.RelightableFile)
        assert isinstance(codec.read_any(hsh_dir), HSHMap)

    def test_classical_tag_rejected_by_neural_reader(self, rng, tmp_path):
        from relightkit.classical import HSHMap

        out = codec.write_classical_map(
            HSHMap(coeffs=rng.normal(size=(4, 4, 3, 9)), order=3), tmp_path / "hsh"
        )
        with pytest.raises(SchemaViolation):
            codec.read_relightable(out)


class TestCheckpoint:
    def test_model_round_trip(self, tmp_path):
        model = neural.build_model(
            neural.EncoderSpec(3, 150, 9), neural.DecoderSpec(20), 49, seed=4
        )
        model.trained = True
        path = codec.write_checkpoint(model, tmp_path / "ckpt.json", "neuralrti")
        restored = codec.read_checkpoint(path)
        assert restored.encoder.layer_sizes == model.encoder.layer_sizes
        assert restored.decoder.layer_sizes == model.decoder.layer_sizes
        assert restored.trained
        for a, b in zip(restored.parameters(), model.parameters()):
            np.testing.assert_array_equal(a, b)
