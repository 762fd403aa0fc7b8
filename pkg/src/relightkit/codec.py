"""The deployable relightable-image container.

A neural relightable file is a directory holding ``info.json`` (decoder
weights, quantization parameters, metadata) plus lossless PNG planes that
pack the byte-quantized latent codes three features per plane. The same
``info.json`` key set is rewritten canonically on every save, so
write -> read -> write round-trips byte for byte. Classical PTM/HSH maps
share the directory layout but keep their per-pixel coefficients as raw
float32 (they skip byte quantization entirely).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import nn
from .classical import HSHMap, PTMMap
from .errors import (
    CountMismatch,
    MissingFile,
    NonFiniteLatent,
    PlaneDimensionMismatch,
    SchemaViolation,
    ShapeMismatch,
)
from .mlic import LightDirection
from .neural import LatentImage, decoder_param_count

FORMAT_VERSION = 1
NEURAL_METHODS = ("disk-neuralrti", "neuralrti")
CLASSICAL_METHODS = ("ptm-lrgb", "hsh-3")
KNOWN_METHODS = NEURAL_METHODS + CLASSICAL_METHODS
INFO_NAME = "info.json"
COEFFS_NAME = "coeffs.npy"
PTM_COEFFS = 9  # 6 luminance terms + 3 chroma values per pixel

_HEADER_KEYS = (
    "format_version",
    "method",
    "width",
    "height",
    "K",
    "decoder",
    "quant",
    "lights_trained",
)
_DECODER_KEYS = ("layer_sizes", "activation", "weights", "biases")
_QUANT_KEYS = ("offsets", "scales")


@dataclass(frozen=True)
class QuantSpec:
    """Per-feature byte mapping: value = offset + byte * scale."""

    offsets: np.ndarray  # (K,)
    scales: np.ndarray  # (K,), > 0 (1.0 for constant features)

    def __post_init__(self):
        object.__setattr__(self, "offsets", np.asarray(self.offsets, dtype=np.float64))
        object.__setattr__(self, "scales", np.asarray(self.scales, dtype=np.float64))
        if self.offsets.shape != self.scales.shape or self.offsets.ndim != 1:
            raise ShapeMismatch("offsets and scales must be matching 1-D arrays")
        if np.any(self.scales <= 0):
            raise ShapeMismatch("scales must be positive")


@dataclass
class RelightableFile:
    """In-memory neural relightable file: header fields + byte planes."""

    method: str
    width: int
    height: int
    k: int
    decoder: nn.Network
    quant: QuantSpec
    lights_trained: int
    planes: np.ndarray  # (H, W, K) uint8
    format_version: int = FORMAT_VERSION

    def dequantized_codes(self) -> np.ndarray:
        return self.quant.offsets + self.planes.astype(np.float64) * self.quant.scales


def quantize(latent: LatentImage) -> tuple[np.ndarray, QuantSpec]:
    """Map each latent feature onto bytes with a per-feature offset/scale.

    offset = feature min, scale = (max - min) / 255 (scale 1 for constant
    features, whose bytes are all zero). Round-trip error is bounded by
    scale / 2 per value.
    """
    codes = latent.codes
    if not np.all(np.isfinite(codes)):
        raise NonFiniteLatent("latent codes contain NaN or infinity")
    lo = codes.min(axis=(0, 1))
    hi = codes.max(axis=(0, 1))
    constant = hi == lo
    offsets = lo
    scales = np.where(constant, 1.0, (hi - lo) / 255.0)
    bytes_ = np.round((codes - offsets) / scales)
    planes = np.clip(bytes_, 0, 255).astype(np.uint8)
    return planes, QuantSpec(offsets=offsets, scales=scales)


def dequantize(planes: np.ndarray, quant: QuantSpec) -> np.ndarray:
    return quant.offsets + planes.astype(np.float64) * quant.scales


def _network_to_json(net: nn.Network) -> dict:
    return {
        "layer_sizes": net.layer_sizes,
        "activation": "elu",
        "weights": [layer.weights.ravel().tolist() for layer in net.layers],
        "biases": [layer.biases.tolist() for layer in net.layers],
    }


def _network_from_json(obj: dict, context: str) -> nn.Network:
    for key in _DECODER_KEYS:
        if key not in obj:
            raise SchemaViolation(f"{context} is missing required key {key!r}")
    sizes = obj["layer_sizes"]
    if not isinstance(sizes, list) or len(sizes) < 2:
        raise SchemaViolation(f"{context}.layer_sizes must list at least two sizes")
    if obj["activation"] != "elu":
        raise SchemaViolation(
            f"{context}.activation must be 'elu', got {obj['activation']!r}"
        )
    weights, biases = obj["weights"], obj["biases"]
    n_layers = len(sizes) - 1
    if len(weights) != n_layers or len(biases) != n_layers:
        raise CountMismatch(
            f"{context}: {n_layers} layers but {len(weights)} weight arrays "
            f"and {len(biases)} bias arrays"
        )
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
        w = np.asarray(weights[i], dtype=np.float64)
        b = np.asarray(biases[i], dtype=np.float64)
        if w.size != fan_in * fan_out:
            raise CountMismatch(
                f"{context} layer {i}: {w.size} weights, "
                f"expected {fan_in * fan_out}"
            )
        if b.size != fan_out:
            raise CountMismatch(
                f"{context} layer {i}: {b.size} biases, expected {fan_out}"
            )
        activation = "elu" if i < n_layers - 1 else "identity"
        layers.append(nn.DenseLayer(w.reshape(fan_out, fan_in), b, activation))
    return nn.Network(layers)


def _write_json(path: Path, obj: dict) -> None:
    path.write_text(
        json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def n_planes(k: int) -> int:
    return (k + 2) // 3


def _plane_name(index: int) -> str:
    return f"plane_{index}.png"


def write_relightable(
    decoder: nn.Network,
    quant: QuantSpec,
    planes: np.ndarray,
    meta: dict,
    out_dir,
) -> Path:
    """Write info.json plus plane_*.png into a directory.

    meta must provide method (neural tags only), lights_trained, and may
    override width/height/K (defaults come from the plane array).
    """
    planes = np.asarray(planes)
    if planes.dtype != np.uint8 or planes.ndim != 3:
        raise ShapeMismatch(f"planes must be (H, W, K) uint8, got {planes.dtype}")
    h, w, k = planes.shape
    method = meta.get("method", "neuralrti")
    if method not in NEURAL_METHODS:
        raise SchemaViolation(f"write_relightable handles {NEURAL_METHODS}, got {method!r}")
    if quant.offsets.shape[0] != k:
        raise ShapeMismatch(f"{quant.offsets.shape[0]} quant entries for K={k}")
    if decoder.in_dim != k + 2 or decoder.out_dim != 3:
        raise ShapeMismatch(
            f"decoder maps {decoder.in_dim}->{decoder.out_dim}, expected {k + 2}->3"
        )
    sizes = decoder.layer_sizes
    if len(sizes) != 4 or sizes[1] != sizes[2]:
        raise ShapeMismatch(
            f"decoder layer sizes {sizes} are not the {k + 2}->N->N->3 shape"
        )
    if k % 3 != 0:
        raise ShapeMismatch("K must be a multiple of 3 in format_version 1")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = {
        "format_version": FORMAT_VERSION,
        "method": method,
        "width": w,
        "height": h,
        "K": k,
        "decoder": _network_to_json(decoder),
        "quant": {
            "offsets": quant.offsets.tolist(),
            "scales": quant.scales.tolist(),
        },
        "lights_trained": int(meta.get("lights_trained", 0)),
    }
    _write_json(out_dir / INFO_NAME, header)
    for p in range(n_planes(k)):
        rgb = planes[:, :, 3 * p : 3 * p + 3]
        Image.fromarray(rgb, mode="RGB").save(out_dir / _plane_name(p))
    return out_dir


def _require_keys(obj: dict, keys, context: str) -> None:
    for key in keys:
        if key not in obj:
            raise SchemaViolation(f"{context} is missing required key {key!r}")


def read_relightable(directory) -> RelightableFile:
    """Read and validate a neural relightable directory."""
    directory = Path(directory)
    info_path = directory / INFO_NAME
    if not info_path.is_file():
        raise MissingFile(f"{info_path} not found")
    header = json.loads(info_path.read_text(encoding="utf-8"))
    _require_keys(header, _HEADER_KEYS, INFO_NAME)
    method = header["method"]
    if method not in KNOWN_METHODS:
        raise SchemaViolation(f"unknown method tag {method!r}")
    if method in CLASSICAL_METHODS:
        raise SchemaViolation(
            f"method {method!r} is a classical map; use read_classical_map"
        )
    if header["format_version"] != FORMAT_VERSION:
        raise SchemaViolation(
            f"unsupported format_version {header['format_version']!r}"
        )

    w, h, k = header["width"], header["height"], header["K"]
    _require_keys(header["quant"], _QUANT_KEYS, "quant")
    offsets = np.asarray(header["quant"]["offsets"], dtype=np.float64)
    scales = np.asarray(header["quant"]["scales"], dtype=np.float64)
    if offsets.size != k or scales.size != k:
        raise CountMismatch(f"quant arrays must each hold K={k} values")

    decoder = _network_from_json(header["decoder"], "decoder")
    sizes = decoder.layer_sizes
    if len(sizes) != 4 or sizes[0] != k + 2 or sizes[3] != 3 or sizes[1] != sizes[2]:
        raise SchemaViolation(
            f"decoder layer_sizes {sizes} do not describe a {k + 2}->N->N->3 decoder"
        )
    expected_w, expected_b = decoder_param_count(k, sizes[1])
    total_w = sum(layer.weights.size for layer in decoder.layers)
    total_b = sum(layer.biases.size for layer in decoder.layers)
    if total_w != expected_w or total_b != expected_b:
        raise CountMismatch(
            f"decoder holds {total_w} weights / {total_b} biases, "
            f"expected {expected_w} / {expected_b} for K={k}, N={sizes[1]}"
        )

    planes = np.empty((h, w, k), dtype=np.uint8)
    for p in range(n_planes(k)):
        path = directory / _plane_name(p)
        if not path.is_file():
            raise MissingFile(f"{path} not found")
        with Image.open(path) as img:
            data = np.asarray(img.convert("RGB"), dtype=np.uint8)
        if data.shape != (h, w, 3):
            raise PlaneDimensionMismatch(
                f"{path.name} is {data.shape[1]}x{data.shape[0]}, "
                f"header says {w}x{h}"
            )
        planes[:, :, 3 * p : 3 * p + 3] = data

    return RelightableFile(
        method=method,
        width=w,
        height=h,
        k=k,
        decoder=decoder,
        quant=QuantSpec(offsets=offsets, scales=scales),
        lights_trained=int(header["lights_trained"]),
        planes=planes,
    )


DECODE_CHUNK = 1 << 15

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


if HAVE_NUMBA:

    @_njit(cache=True, fastmath=True)
    def _decode_rows_fused(
        bytes_, offsets, scales, lx, ly, w1, b1, w2, b2, w3, b3, out
    ):  # pragma: no cover - exercised through cpu_relight_file
        n, k = bytes_.shape
        n1 = b1.size
        n2 = b2.size
        one = np.float32(1.0)
        zero = np.float32(0.0)
        x = np.empty(k + 2, np.float32)
        h1 = np.empty(n1, np.float32)
        h2 = np.empty(n2, np.float32)
        for p in range(n):
            for i in range(k):
                x[i] = offsets[i] + np.float32(bytes_[p, i]) * scales[i]
            x[k] = lx
            x[k + 1] = ly
            for j in range(n1):
                acc = b1[j]
                for i in range(k + 2):
                    acc += w1[j, i] * x[i]
                h1[j] = acc if acc > 0 else np.exp(acc) - one
            for j in range(n2):
                acc = b2[j]
                for i in range(n1):
                    acc += w2[j, i] * h1[i]
                h2[j] = acc if acc > 0 else np.exp(acc) - one
            for c in range(3):
                acc = b3[c]
                for i in range(n2):
                    acc += w3[c, i] * h2[i]
                out[p, c] = min(one, max(zero, acc))


def _elu_fast(pre: np.ndarray) -> np.ndarray:
    # max(x, 0) + exp(min(x, 0)) - 1, all fused elementwise passes; avoids
    # the branch/scatter cost that otherwise dwarfs the layer products
    lo = np.minimum(pre, 0.0)
    np.exp(lo, out=lo)
    lo -= 1.0
    np.maximum(pre, 0.0, out=pre)
    pre += lo
    return pre


def _decode_rows_numpy(flat, offsets, scales, light, layers, out):
    k = offsets.size
    for start in range(0, flat.shape[0], DECODE_CHUNK):
        sl = slice(start, min(start + DECODE_CHUNK, flat.shape[0]))
        block = np.empty((sl.stop - sl.start, k + 2), dtype=np.float32)
        np.multiply(flat[sl], scales, out=block[:, :k])
        block[:, :k] += offsets
        block[:, k] = light.lx
        block[:, k + 1] = light.ly
        x = block
        for weights_t, biases, activation in layers:
            x = x @ weights_t
            x += biases
            if activation == "elu":
                _elu_fast(x)
        np.clip(x, 0.0, 1.0, out=x)
        out[sl] = x


def cpu_relight_file(
    file: RelightableFile, light: LightDirection, scale: int = 1
) -> np.ndarray:
    """Reference CPU decode: dequantize, run the decoder, clamp to [0, 1].

    scale > 1 decodes every scale-th pixel and nearest-upscales back to the
    full (H, W) frame — the reference for the viewer's resolution toggle.
    Arithmetic runs in float32, matching the GPU shader, through one fused
    per-pixel kernel: per pixel, exactly the decoder's multiplications and
    additions plus the ELU evaluations, so decode time tracks the weight
    count the way the shader's does. A vectorized numpy path stands in
    when the JIT is unavailable.
    """
    if scale < 1:
        raise ValueError("scale must be >= 1")
    planes = file.planes[::scale, ::scale]
    sub_h, sub_w, k = planes.shape
    flat = np.ascontiguousarray(planes.reshape(sub_h * sub_w, k))
    offsets = file.quant.offsets.astype(np.float32)
    scales = file.quant.scales.astype(np.float32)
    out = np.empty((sub_h * sub_w, 3), dtype=np.float32)
    if HAVE_NUMBA:
        l1, l2, l3 = file.decoder.layers
        _decode_rows_fused(
            flat,
            offsets,
            scales,
            np.float32(light.lx),
            np.float32(light.ly),
            l1.weights.astype(np.float32),
            l1.biases.astype(np.float32),
            l2.weights.astype(np.float32),
            l2.biases.astype(np.float32),
            l3.weights.astype(np.float32),
            l3.biases.astype(np.float32),
            out,
        )
    else:
        layers = [
            (l.weights.T.astype(np.float32), l.biases.astype(np.float32), l.activation)
            for l in file.decoder.layers
        ]
        _decode_rows_numpy(flat, offsets, scales, light, layers, out)
    img = out.reshape(sub_h, sub_w, 3).astype(np.float64)
    if scale == 1:
        return img
    img = np.repeat(np.repeat(img, scale, axis=0), scale, axis=1)
    return img[: file.height, : file.width]


def write_classical_map(pixel_map, out_dir) -> Path:
    """Serialize a fitted PTM/HSH map: info.json + float32 coefficients.

    PTM packs [6 poly, 3 chroma] per pixel (K=9); HSH packs the channel-
    major coefficient block (K = 3 * order^2).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if isinstance(pixel_map, PTMMap):
        coeffs = np.concatenate([pixel_map.poly, pixel_map.chroma], axis=2)
    elif isinstance(pixel_map, HSHMap):
        h, w = pixel_map.coeffs.shape[:2]
        coeffs = pixel_map.coeffs.reshape(h, w, -1)
    else:
        raise ShapeMismatch(f"cannot serialize {type(pixel_map).__name__}")
    h, w, k = coeffs.shape
    header = {
        "format_version": FORMAT_VERSION,
        "method": pixel_map.method,
        "width": w,
        "height": h,
        "K": k,
        "coefficients": COEFFS_NAME,
        "dtype": "float32",
    }
    if isinstance(pixel_map, HSHMap):
        header["order"] = pixel_map.order
    _write_json(out_dir / INFO_NAME, header)
    np.save(out_dir / COEFFS_NAME, coeffs.astype(np.float32))
    return out_dir


def read_classical_map(directory):
    """Load a classical map directory back into a PTMMap or HSHMap."""
    directory = Path(directory)
    info_path = directory / INFO_NAME
    if not info_path.is_file():
        raise MissingFile(f"{info_path} not found")
    header = json.loads(info_path.read_text(encoding="utf-8"))
    _require_keys(
        header, ("format_version", "method", "width", "height", "K"), INFO_NAME
    )
    method = header["method"]
    if method not in CLASSICAL_METHODS:
        raise SchemaViolation(f"{method!r} is not a classical map tag")
    coeffs = np.load(directory / header.get("coefficients", COEFFS_NAME))
    coeffs = coeffs.astype(np.float64)
    h, w, k = coeffs.shape
    if (h, w, k) != (header["height"], header["width"], header["K"]):
        raise PlaneDimensionMismatch(
            f"coefficient array {coeffs.shape} disagrees with header"
        )
    if method == "ptm-lrgb":
        if k != PTM_COEFFS:
            raise CountMismatch(f"ptm-lrgb stores 9 values per pixel, found {k}")
        poly, chroma = coeffs[:, :, :6], coeffs[:, :, 6:]
        black = chroma.sum(axis=2) < 0.5
        return PTMMap(poly=poly, chroma=chroma, black_mask=black)
    order = int(header.get("order", 3))
    if k != 3 * order**2:
        raise CountMismatch(f"hsh order {order} stores {3 * order**2} values, found {k}")
    return HSHMap(coeffs=coeffs.reshape(h, w, 3, order**2), order=order)


def read_any(directory):
    """Open either container flavor by dispatching on the method tag."""
    directory = Path(directory)
    info_path = directory / INFO_NAME
    if not info_path.is_file():
        raise MissingFile(f"{info_path} not found")
    header = json.loads(info_path.read_text(encoding="utf-8"))
    method = header.get("method")
    if method in CLASSICAL_METHODS:
        return read_classical_map(directory)
    return read_relightable(directory)


def write_checkpoint(model, path, method: str = "neuralrti") -> Path:
    """Save a full encoder+decoder model as JSON (same network layout as
    the relightable header, plus the encoder and its spec)."""
    from .neural import NeuralRTIModel  # local import breaks the cycle

    assert isinstance(model, NeuralRTIModel)
    path = Path(path)
    obj = {
        "format_version": FORMAT_VERSION,
        "kind": "model-checkpoint",
        "method": method,
        "encoder": _network_to_json(model.encoder),
        "decoder": _network_to_json(model.decoder),
        "encoder_spec": {
            "hidden_layers": model.encoder_spec.hidden_layers,
            "hidden_width": model.encoder_spec.hidden_width,
            "latent_dim": model.encoder_spec.latent_dim,
        },
        "decoder_spec": {"hidden_width": model.decoder_spec.hidden_width},
        "lights_trained": model.n_train_lights,
        "trained": model.trained,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_json(path, obj)
    return path


def read_checkpoint(path):
    """Load a model checkpoint written by write_checkpoint."""
    from .neural import DecoderSpec, EncoderSpec, NeuralRTIModel

    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"checkpoint not found: {path}")
    obj = json.loads(path.read_text(encoding="utf-8"))
    _require_keys(
        obj,
        ("kind", "encoder", "decoder", "encoder_spec", "decoder_spec", "lights_trained"),
        path.name,
    )
    if obj["kind"] != "model-checkpoint":
        raise SchemaViolation(f"{path.name} is not a model checkpoint")
    enc_spec = EncoderSpec(**obj["encoder_spec"])
    dec_spec = DecoderSpec(hidden_width=obj["decoder_spec"]["hidden_width"])
    model = NeuralRTIModel(
        encoder=_network_from_json(obj["encoder"], "encoder"),
        decoder=_network_from_json(obj["decoder"], "decoder"),
        encoder_spec=enc_spec,
        decoder_spec=dec_spec,
        n_train_lights=int(obj["lights_trained"]),
        trained=bool(obj.get("trained", True)),
    )
    return model
