"""Relighting autoencoders: teachers, distilled students, latent encoding.

The teacher is an asymmetric autoencoder: a wide encoder maps each pixel's
stacked train-light colors to a 9-value latent code, and a small decoder
maps (code, lx, ly) to RGB. Teachers train end to end against ground truth;
students keep the encoder architecture but shrink the decoder and train
against a blend of ground truth and the frozen teacher's predictions,
which keeps tiny decoders from collapsing into blurry fits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .errors import (
    AlphaOutOfRange,
    DimensionMismatch,
    EmptyTrainingSet,
    TeacherUntrained,
)
from .mlic import MLIC, LightDirection, SplitSpec, TrainingTable

SUPPORTED_DECODER_WIDTHS = (10, 20, 40, 50)
ENCODER_DEPTHS = (3, 6)
DEFAULT_LATENT_DIM = 9
ENCODE_CHUNK = 1 << 14


@dataclass(frozen=True)
class EncoderSpec:
    hidden_layers: int = 3  # 3 = standard teacher, 6 = deep teacher
    hidden_width: int = 150
    latent_dim: int = DEFAULT_LATENT_DIM

    def __post_init__(self):
        if self.hidden_layers not in ENCODER_DEPTHS:
            raise ValueError(f"encoder depth must be one of {ENCODER_DEPTHS}")
        if self.hidden_width < 1 or self.latent_dim < 1:
            raise ValueError("encoder sizes must be positive")


@dataclass(frozen=True)
class DecoderSpec:
    hidden_width: int = 50
    hidden_layers: int = 2
    light_dim: int = 2

    def __post_init__(self):
        if self.hidden_layers != 2:
            raise ValueError("decoder uses exactly two hidden layers")
        if self.hidden_width not in SUPPORTED_DECODER_WIDTHS:
            raise ValueError(
                f"decoder width must be one of {SUPPORTED_DECODER_WIDTHS}"
            )


def decoder_param_count(latent_dim: int, width: int) -> tuple[int, int]:
    """Weight and bias counts of a (latent_dim+2) -> width -> width -> 3
    decoder: W = (K+2)N + N^2 + 3N, B = 2N + 3."""
    if latent_dim < 1 or width < 1:
        raise ValueError("latent_dim and width must be >= 1")
    weights = (latent_dim + 2) * width + width * width + width * 3
    biases = width + width + 3
    return weights, biases


@dataclass
class NeuralRTIModel:
    """Encoder + decoder pair with the specs they were built from."""

    encoder: nn.Network
    decoder: nn.Network
    encoder_spec: EncoderSpec
    decoder_spec: DecoderSpec
    n_train_lights: int
    trained: bool = False

    def __post_init__(self):
        k = self.encoder_spec.latent_dim
        if self.encoder.in_dim != 3 * self.n_train_lights:
            raise DimensionMismatch(
                f"encoder input {self.encoder.in_dim} != 3 x {self.n_train_lights}"
            )
        if self.encoder.out_dim != k:
            raise DimensionMismatch("encoder output differs from latent_dim")
        if self.decoder.in_dim != k + self.decoder_spec.light_dim:
            raise DimensionMismatch("decoder input differs from latent_dim + 2")
        if self.decoder.out_dim != 3:
            raise DimensionMismatch("decoder must output RGB")

    @property
    def latent_dim(self) -> int:
        return self.encoder_spec.latent_dim

    def parameters(self) -> list[np.ndarray]:
        return self.encoder.parameters() + self.decoder.parameters()


@dataclass
class DistillConfig:
    """Blend weight and architecture for training a student from a teacher.

    alpha weighs the ground-truth term; (1 - alpha) weighs agreement with
    the teacher. The method is insensitive across roughly [0.1, 0.7].
    """

    teacher: NeuralRTIModel
    student_decoder: DecoderSpec = field(default_factory=lambda: DecoderSpec(20))
    alpha: float = 0.6
    student_encoder: EncoderSpec | None = None  # defaults to the teacher's
    copy_encoder: bool = False  # start from the teacher's encoder weights

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise AlphaOutOfRange(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass
class LatentImage:
    """Per-pixel codes (H, W, K) produced by a trained encoder."""

    codes: np.ndarray

    def __post_init__(self):
        self.codes = np.asarray(self.codes, dtype=np.float64)
        if self.codes.ndim != 3:
            raise DimensionMismatch("codes must be (H, W, K)")

    @property
    def height(self) -> int:
        return self.codes.shape[0]

    @property
    def width(self) -> int:
        return self.codes.shape[1]

    @property
    def k(self) -> int:
        return self.codes.shape[2]


def build_model(
    enc: EncoderSpec, dec: DecoderSpec, n_train_lights: int, seed: int = 0
) -> NeuralRTIModel:
    """Assemble a fresh model. Encoder: 3L -> width^depth (ELU) -> K
    (identity). Decoder: K+2 -> N -> N (ELU) -> 3 (identity)."""
    enc_sizes = (
        [3 * n_train_lights] + [enc.hidden_width] * enc.hidden_layers + [enc.latent_dim]
    )
    enc_acts = ["elu"] * enc.hidden_layers + ["identity"]
    dec_sizes = [enc.latent_dim + dec.light_dim, dec.hidden_width, dec.hidden_width, 3]
    dec_acts = ["elu", "elu", "identity"]
    rng = np.random.default_rng(seed)
    enc_seed, dec_seed = rng.integers(0, 2**32, size=2)
    return NeuralRTIModel(
        encoder=nn.build_network(enc_sizes, enc_acts, seed=int(enc_seed)),
        decoder=nn.build_network(dec_sizes, dec_acts, seed=int(dec_seed)),
        encoder_spec=enc,
        decoder_spec=dec,
        n_train_lights=n_train_lights,
    )


def _decoder_inputs(codes: np.ndarray, lights_xy: np.ndarray) -> np.ndarray:
    """Tile (B, K) codes against (L, 2) lights into (B*L, K+2) rows."""
    b, k = codes.shape
    n_lights = lights_xy.shape[0]
    rows = np.empty((b, n_lights, k + 2), dtype=np.float64)
    rows[:, :, :k] = codes[:, None, :]
    rows[:, :, k:] = lights_xy[None, :, :]
    return rows.reshape(b * n_lights, k + 2)


def relighting_loss_and_grads(
    model: NeuralRTIModel,
    inputs: np.ndarray,
    targets: np.ndarray,
    lights_xy: np.ndarray,
    alpha: float = 1.0,
    teacher_pred: np.ndarray | None = None,
):
    """Loss and gradients of the end-to-end relighting objective.

    For each pixel row the encoder runs once and the decoder runs once per
    train light; the per-sample loss is
    alpha * |pred - truth|^2 + (1 - alpha) * |pred - teacher|^2 (squared
    RGB distance), averaged over pixel-light samples. Returns
    (loss, encoder grads, decoder grads) with gradients flowing through
    the shared latent code.
    """
    b = inputs.shape[0]
    n_lights = lights_xy.shape[0]
    k = model.latent_dim

    codes, enc_caches = nn.forward(model.encoder, inputs)
    dec_in = _decoder_inputs(codes, lights_xy)
    pred, dec_caches = nn.forward(model.decoder, dec_in)
    pred = pred.reshape(b, n_lights, 3)

    n_samples = b * n_lights
    gt_diff = pred - targets
    loss = alpha * float(np.sum(np.square(gt_diff)))
    grad = alpha * gt_diff
    if alpha < 1.0:
        if teacher_pred is None:
            raise ValueError("teacher predictions required when alpha < 1")
        t_diff = pred - teacher_pred
        loss += (1.0 - alpha) * float(np.sum(np.square(t_diff)))
        grad = grad + (1.0 - alpha) * t_diff
    loss /= n_samples
    grad = (2.0 / n_samples) * grad

    dec_grads, dec_in_grad = nn.backward(
        model.decoder, dec_caches, grad.reshape(b * n_lights, 3)
    )
    code_grad = dec_in_grad[:, :k].reshape(b, n_lights, k).sum(axis=1)
    enc_grads, _ = nn.backward(model.encoder, enc_caches, code_grad)
    return loss, enc_grads, dec_grads


def _evaluate_loss(model, inputs, targets, lights_xy, alpha, teacher_pred):
    """Forward-only loss over a row subset, chunked to bound memory."""
    total = 0.0
    n = inputs.shape[0]
    for start in range(0, n, ENCODE_CHUNK):
        sl = slice(start, min(start + ENCODE_CHUNK, n))
        codes, _ = nn.forward(model.encoder, inputs[sl])
        pred, _ = nn.forward(model.decoder, _decoder_inputs(codes, lights_xy))
        pred = pred.reshape(-1, lights_xy.shape[0], 3)
        part = alpha * np.sum(np.square(pred - targets[sl]))
        if alpha < 1.0:
            part += (1.0 - alpha) * np.sum(np.square(pred - teacher_pred[sl]))
        total += float(part)
    return total / (n * lights_xy.shape[0])


def _train_relighting(
    model: NeuralRTIModel,
    table: TrainingTable,
    cfg: nn.TrainConfig,
    alpha: float = 1.0,
    teacher_pred: np.ndarray | None = None,
) -> nn.TrainResult:
    """Shared trainer for teachers (alpha=1) and distilled students."""
    if table.n_rows == 0:
        raise EmptyTrainingSet("training table has no rows")
    inputs = table.encoder_inputs()
    targets = table.colors
    if inputs.shape[1] != model.encoder.in_dim:
        raise DimensionMismatch(
            f"table rows have {inputs.shape[1]} values, "
            f"encoder expects {model.encoder.in_dim}"
        )
    lights_xy = table.lights_xy

    rng = np.random.default_rng(cfg.seed)
    train_idx, val_idx = nn.train_val_split(table.n_rows, cfg.val_fraction, rng)
    if train_idx.size == 0:
        raise EmptyTrainingSet("validation split consumed every row")

    params = model.parameters()
    state = nn.AdamState.for_params(params, cfg.lr, cfg.beta1, cfg.beta2)
    stopper = nn.EarlyStopper(cfg.patience, cfg.patience_steps)
    best = nn.clone_params(params)
    history: list[tuple[float, float]] = []

    t_val = teacher_pred[val_idx] if teacher_pred is not None else None
    for epoch in range(cfg.max_epochs):
        state.lr = cfg.epoch_lr(epoch)
        order = train_idx[rng.permutation(train_idx.size)]
        epoch_loss = 0.0
        steps = 0
        for start in range(0, order.size, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            t_batch = teacher_pred[batch] if teacher_pred is not None else None
            loss, enc_grads, dec_grads = relighting_loss_and_grads(
                model, inputs[batch], targets[batch], lights_xy, alpha, t_batch
            )
            flat = [g for pair in enc_grads + dec_grads for g in pair]
            nn.adam_step(params, flat, state)
            epoch_loss += loss * batch.size
            steps += 1
        epoch_loss /= order.size

        val_loss = _evaluate_loss(
            model, inputs[val_idx], targets[val_idx], lights_xy, alpha, t_val
        )
        history.append((epoch_loss, val_loss))

        improved = val_loss < stopper.best
        stop = stopper.update(epoch, val_loss, steps)
        if improved:
            best = nn.clone_params(params)
        if stop:
            break

    nn.set_params(params, best)
    model.trained = True
    return nn.TrainResult(
        network=model.decoder,
        history=history,
        best_epoch=stopper.best_epoch,
        epochs_run=len(history),
    )


def train_teacher(
    model: NeuralRTIModel, table: TrainingTable, cfg: nn.TrainConfig
) -> nn.TrainResult:
    """End-to-end training against ground truth (pure reconstruction MSE)."""
    return _train_relighting(model, table, cfg, alpha=1.0)


def teacher_predictions(model: NeuralRTIModel, table: TrainingTable) -> np.ndarray:
    """Frozen-teacher predictions for every (pixel, light) in the table.

    Precomputed once per table; numerically identical to evaluating the
    teacher on the fly during distillation.
    """
    if not model.trained:
        raise TeacherUntrained("teacher must be trained before distilling")
    inputs = table.encoder_inputs()
    preds = np.empty_like(table.colors)
    n_lights = table.n_lights
    for start in range(0, table.n_rows, ENCODE_CHUNK):
        sl = slice(start, min(start + ENCODE_CHUNK, table.n_rows))
        codes, _ = nn.forward(model.encoder, inputs[sl])
        out, _ = nn.forward(model.decoder, _decoder_inputs(codes, table.lights_xy))
        preds[sl] = out.reshape(-1, n_lights, 3)
    return preds


def distill_student(
    cfg: DistillConfig, table: TrainingTable, tcfg: nn.TrainConfig
) -> tuple[NeuralRTIModel, nn.TrainResult]:
    """Train a small-decoder student guided by a frozen teacher.

    The student re-learns its own encoder (same architecture as the
    teacher's unless overridden) so the latent codes can adapt to the
    weaker decoder; pass copy_encoder=True to start from the teacher's
    encoder weights instead.
    """
    teacher = cfg.teacher
    if not teacher.trained:
        raise TeacherUntrained("teacher must be trained before distilling")
    enc_spec = cfg.student_encoder or teacher.encoder_spec
    student = build_model(
        enc_spec, cfg.student_decoder, teacher.n_train_lights, seed=tcfg.seed
    )
    if cfg.copy_encoder:
        if enc_spec != teacher.encoder_spec:
            raise DimensionMismatch(
                "copy_encoder requires matching encoder architectures"
            )
        student.encoder = teacher.encoder.copy()
    t_pred = teacher_predictions(teacher, table)
    result = _train_relighting(
        student, table, tcfg, alpha=cfg.alpha, teacher_pred=t_pred
    )
    return student, result


def encode_latents(
    model: NeuralRTIModel, mlic: MLIC, split: SplitSpec
) -> LatentImage:
    """One encoder pass per pixel over its train-light colors."""
    train_idx = split.train_indices
    if 3 * train_idx.size != model.encoder.in_dim:
        raise DimensionMismatch(
            f"{train_idx.size} train lights but encoder expects "
            f"{model.encoder.in_dim // 3}"
        )
    h, w = mlic.height, mlic.width
    # (L, H, W, 3) -> (H*W, 3L) interleaved by light
    rows = mlic.images[train_idx].transpose(1, 2, 0, 3).reshape(h * w, -1)
    codes = np.empty((h * w, model.latent_dim), dtype=np.float64)
    for start in range(0, h * w, ENCODE_CHUNK):
        sl = slice(start, min(start + ENCODE_CHUNK, h * w))
        codes[sl], _ = nn.forward(model.encoder, rows[sl])
    return LatentImage(codes=codes.reshape(h, w, model.latent_dim))


def relight(latent, decoder: nn.Network, light: LightDirection) -> np.ndarray:
    """Decode one latent vector under one light; returns unclamped RGB."""
    latent = np.asarray(latent, dtype=np.float64)
    if latent.shape[-1] + 2 != decoder.in_dim:
        raise DimensionMismatch(
            f"latent dim {latent.shape[-1]} + 2 != decoder input {decoder.in_dim}"
        )
    row = np.concatenate([latent, [light.lx, light.ly]])
    out, _ = nn.forward(decoder, row)
    return out


def relight_image(
    latent: LatentImage, decoder: nn.Network, light: LightDirection
) -> np.ndarray:
    """Decode a whole latent image under one light; returns unclamped
    (H, W, 3) float RGB."""
    h, w, k = latent.codes.shape
    if k + 2 != decoder.in_dim:
        raise DimensionMismatch(
            f"latent dim {k} + 2 != decoder input {decoder.in_dim}"
        )
    flat = latent.codes.reshape(h * w, k)
    out = np.empty((h * w, 3), dtype=np.float64)
    light_xy = np.array([light.lx, light.ly], dtype=np.float64)
    for start in range(0, h * w, ENCODE_CHUNK):
        sl = slice(start, min(start + ENCODE_CHUNK, h * w))
        block = np.concatenate(
            [flat[sl], np.broadcast_to(light_xy, (sl.stop - sl.start, 2))], axis=1
        )
        out[sl], _ = nn.forward(decoder, block)
    return out.reshape(h, w, 3)


@dataclass(frozen=True)
class OpCount:
    """Scalar operation tally from one instrumented decoder pass."""

    multiplications: int
    bias_additions: int
    activations: int


def count_decoder_ops(decoder: nn.Network) -> OpCount:
    """Count per-pixel scalar ops by walking a single input through the
    decoder: every weight contributes one multiplication, every bias one
    addition, every ELU unit one activation evaluation."""
    x = np.zeros(decoder.in_dim)
    mults = adds = acts = 0
    for layer in decoder.layers:
        pre = layer.weights @ x + layer.biases
        mults += layer.weights.size  # one multiply per weight entry
        adds += layer.biases.size  # one add per bias entry
        if layer.activation == "elu":
            acts += pre.size
        x = nn.elu(pre) if layer.activation == "elu" else pre
    return OpCount(multiplications=mults, bias_additions=adds, activations=acts)
