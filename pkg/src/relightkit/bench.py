"""Benchmark orchestration: end-to-end pipelines, throughput timing, and
the training-fraction study.

Everything here is importable plumbing shared by the command line and the
acceptance suite: train/evaluate round trips on a collection, decode-speed
measurement on packed files, and the pixel-subsampling study that trades
training time against relight quality.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import classical, codec, neural, nn
from .errors import DimensionMismatch
from .metrics import QualityReport
from .mlic import MLIC, LightDirection, SplitSpec, gather_training_rows, sample_pixels

DEFAULT_TEST_ELEVATIONS = (20.0, 40.0, 60.0, 80.0)
DEFAULT_ELEVATION_TOLERANCE = 5.0


@dataclass
class Timings:
    teacher_train_s: float = 0.0
    student_train_s: float = 0.0
    fit_s: float = 0.0


@dataclass
class ThroughputRow:
    method: str
    pixels: int
    pixels_per_second: float
    params_w: int
    params_b: int
    median_seconds: float


@dataclass
class BenchmarkRun:
    """Everything one orchestrated run produced, ready to serialize."""

    config: dict
    reports: dict[str, QualityReport] = field(default_factory=dict)
    timings: Timings = field(default_factory=Timings)
    throughput: list[ThroughputRow] = field(default_factory=list)


def evaluate_predictions(
    mlic: MLIC, split: SplitSpec, predictions
) -> QualityReport:
    """Score a list of predicted test images against the held-out frames.

    predictions[i] corresponds to split.test_indices[i]; values are clamped
    to [0, 1] before scoring.
    """
    test_idx = split.test_indices
    if len(predictions) != test_idx.size:
        raise DimensionMismatch(
            f"{len(predictions)} predictions for {test_idx.size} test lights"
        )
    report = QualityReport()
    for i, light_idx in enumerate(test_idx):
        light = LightDirection.from_array(mlic.lights[light_idx])
        report.add(light, predictions[i], mlic.images[light_idx])
    return report


def evaluate_model(
    model: neural.NeuralRTIModel, mlic: MLIC, split: SplitSpec
) -> QualityReport:
    """Encode latents once, decode each held-out direction, score."""
    latent = neural.encode_latents(model, mlic, split)
    predictions = [
        neural.relight_image(latent, model.decoder, LightDirection.from_array(v))
        for v in mlic.lights[split.test_indices]
    ]
    return evaluate_predictions(mlic, split, predictions)


def evaluate_file(source, mlic: MLIC, split: SplitSpec) -> QualityReport:
    """Score a packed relightable or classical map on the held-out lights."""
    predictions = [
        decode_source(source, LightDirection.from_array(v))
        for v in mlic.lights[split.test_indices]
    ]
    return evaluate_predictions(mlic, split, predictions)


def decode_source(source, light: LightDirection, scale: int = 1) -> np.ndarray:
    """Relight any loaded source (packed neural file or classical map)."""
    if isinstance(source, codec.RelightableFile):
        return codec.cpu_relight_file(source, light, scale=scale)
    img = classical.relight_classical(source, light)
    if scale > 1:
        h, w = img.shape[:2]
        img = np.repeat(np.repeat(img[::scale, ::scale], scale, axis=0), scale, axis=1)
        img = img[:h, :w]
    return img


def train_teacher_pipeline(
    mlic: MLIC,
    split: SplitSpec,
    *,
    encoder_spec: neural.EncoderSpec | None = None,
    decoder_spec: neural.DecoderSpec | None = None,
    fraction: float = 1.0,
    cfg: nn.TrainConfig | None = None,
    sampling: str = "uniform_random",
    step: int | None = None,
) -> tuple[neural.NeuralRTIModel, nn.TrainResult, float]:
    """Sample pixels, gather rows, train a teacher; returns wall time too."""
    cfg = cfg or nn.TrainConfig()
    encoder_spec = encoder_spec or neural.EncoderSpec()
    decoder_spec = decoder_spec or neural.DecoderSpec(50)
    samples = sample_pixels(mlic, fraction, sampling, seed=cfg.seed, step=step)
    table = gather_training_rows(mlic, samples, split)
    model = neural.build_model(
        encoder_spec, decoder_spec, split.train_indices.size, seed=cfg.seed
    )
    start = time.perf_counter()
    result = neural.train_teacher(model, table, cfg)
    elapsed = time.perf_counter() - start
    return model, result, elapsed


def distill_pipeline(
    teacher: neural.NeuralRTIModel,
    mlic: MLIC,
    split: SplitSpec,
    *,
    student_width: int = 20,
    alpha: float = 0.6,
    fraction: float = 1.0,
    cfg: nn.TrainConfig | None = None,
    copy_encoder: bool = False,
    sampling: str = "uniform_random",
    step: int | None = None,
) -> tuple[neural.NeuralRTIModel, nn.TrainResult, float]:
    """Sample pixels and distill a student from a trained teacher."""
    cfg = cfg or nn.TrainConfig()
    samples = sample_pixels(mlic, fraction, sampling, seed=cfg.seed, step=step)
    table = gather_training_rows(mlic, samples, split)
    dcfg = neural.DistillConfig(
        teacher=teacher,
        student_decoder=neural.DecoderSpec(student_width),
        alpha=alpha,
        copy_encoder=copy_encoder,
    )
    start = time.perf_counter()
    student, result = neural.distill_student(dcfg, table, cfg)
    elapsed = time.perf_counter() - start
    return student, result, elapsed


def pack_model(
    model: neural.NeuralRTIModel, mlic: MLIC, split: SplitSpec, out_dir, method: str
):
    """Encode, quantize, and write a relightable directory; returns the
    read-back (validated) file."""
    latent = neural.encode_latents(model, mlic, split)
    planes, quant = codec.quantize(latent)
    codec.write_relightable(
        model.decoder,
        quant,
        planes,
        {"method": method, "lights_trained": split.train_indices.size},
        out_dir,
    )
    return codec.read_relightable(out_dir)


def _crop_to_pixels(file: codec.RelightableFile, pixels: int) -> codec.RelightableFile:
    """Cut (or tile) the latent planes to roughly the requested pixel count."""
    planes = file.planes
    h, w = planes.shape[:2]
    if pixels > h * w:
        reps_h = int(np.ceil(np.sqrt(pixels / (h * w))))
        planes = np.tile(planes, (reps_h, reps_h, 1))
        h, w = planes.shape[:2]
    crop_w = min(w, pixels)
    crop_h = min(h, int(np.ceil(pixels / crop_w)))
    planes = planes[:crop_h, :crop_w]
    return codec.RelightableFile(
        method=file.method,
        width=crop_w,
        height=crop_h,
        k=file.k,
        decoder=file.decoder,
        quant=file.quant,
        lights_trained=file.lights_trained,
        planes=np.ascontiguousarray(planes),
    )


def measure_throughput(
    file: codec.RelightableFile,
    pixel_counts,
    repeats: int = 5,
    light: LightDirection | None = None,
) -> list[ThroughputRow]:
    """Median decode throughput over cropped regions of the given sizes.

    Each size is decoded `repeats` times (minimum 5 recommended to resist
    scheduler noise) and the median wall time converts to pixels/second.
    """
    if any(c < 1 for c in pixel_counts):
        raise ValueError("pixel counts must be >= 1")
    light = light or LightDirection(0.3, 0.2, float(np.sqrt(1 - 0.09 - 0.04)))
    n = file.decoder.layer_sizes[1]
    params_w, params_b = neural.decoder_param_count(file.k, n)
    rows = []
    for count in pixel_counts:
        cropped = _crop_to_pixels(file, int(count))
        actual = cropped.width * cropped.height
        codec.cpu_relight_file(_crop_to_pixels(file, 1), light)  # JIT warmup
        times = []
        for _ in range(max(1, repeats)):
            start = time.perf_counter()
            codec.cpu_relight_file(cropped, light)
            times.append(time.perf_counter() - start)
        median = float(np.median(times))
        rows.append(
            ThroughputRow(
                method=f"{file.method}-n{n}",
                pixels=actual,
                pixels_per_second=actual / median,
                params_w=params_w,
                params_b=params_b,
                median_seconds=median,
            )
        )
    return rows


@dataclass
class SubsampleRow:
    fraction: float
    teacher_psnr: float
    teacher_ssim: float
    student_psnr: float
    student_ssim: float
    teacher_train_s: float
    student_train_s: float

    @property
    def total_train_s(self) -> float:
        return self.teacher_train_s + self.student_train_s


def study_subsample(
    mlic: MLIC,
    split: SplitSpec,
    fractions,
    *,
    encoder_spec: neural.EncoderSpec | None = None,
    student_width: int = 20,
    alpha: float = 0.6,
    cfg: nn.TrainConfig | None = None,
    sampling: str = "uniform_random",
) -> list[SubsampleRow]:
    """Full teacher+student pipeline per training fraction, fixed seeds.

    The same training configuration runs at every fraction so wall time
    tracks the row count; quality columns are informational. Uniform
    random sampling is the default — it cannot alias against repeating
    surface structure; "regular_grid" (fraction 1/s^2 = one pixel per
    s x s tile) gives even coverage on non-repeating scenes.
    """
    cfg = cfg or nn.TrainConfig()
    rows = []
    for fraction in fractions:
        if not (0.0 < fraction <= 1.0):
            raise ValueError(f"fractions must lie in (0, 1], got {fraction}")
        step = None
        if sampling == "regular_grid":
            step = max(1, int(round(1.0 / np.sqrt(fraction))))
        teacher, _, teacher_s = train_teacher_pipeline(
            mlic,
            split,
            encoder_spec=encoder_spec,
            fraction=fraction,
            cfg=cfg,
            sampling=sampling,
            step=step,
        )
        student, _, student_s = distill_pipeline(
            teacher,
            mlic,
            split,
            student_width=student_width,
            alpha=alpha,
            fraction=fraction,
            cfg=cfg,
            sampling=sampling,
            step=step,
        )
        teacher_report = evaluate_model(teacher, mlic, split)
        student_report = evaluate_model(student, mlic, split)
        rows.append(
            SubsampleRow(
                fraction=fraction,
                teacher_psnr=teacher_report.mean_psnr,
                teacher_ssim=teacher_report.mean_ssim,
                student_psnr=student_report.mean_psnr,
                student_ssim=student_report.mean_ssim,
                teacher_train_s=teacher_s,
                student_train_s=student_s,
            )
        )
    return rows
