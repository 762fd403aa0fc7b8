"""Multi-light image collections: loading, light splits, pixel sampling.

A collection is a stack of registered photographs of the same surface, each
taken under one known directional light. Light directions come from a plain
text ``.lp`` file (first line = frame count, then ``filename lx ly lz`` per
line); frames are 8-bit PNGs normalized to [0, 1].
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    DimensionMismatch,
    EmptyTrainSet,
    FractionOutOfRange,
    MalformedLpLine,
    MissingFile,
    NonHemisphericalLight,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LightDirection:
    """Unit vector pointing from the surface toward the light (lz >= 0)."""

    lx: float
    ly: float
    lz: float

    @property
    def elevation_deg(self) -> float:
        return math.degrees(math.asin(min(1.0, max(-1.0, self.lz))))

    @property
    def azimuth_deg(self) -> float:
        return math.degrees(math.atan2(self.ly, self.lx))

    def as_array(self) -> np.ndarray:
        return np.array([self.lx, self.ly, self.lz], dtype=np.float64)

    @staticmethod
    def from_array(v) -> "LightDirection":
        v = np.asarray(v, dtype=np.float64)
        return LightDirection(float(v[0]), float(v[1]), float(v[2]))


@dataclass
class MLIC:
    """Image stack (L, H, W, 3) in [0, 1] plus L aligned unit light vectors.

    Immutable by convention after construction; every consumer treats the
    arrays as read-only.
    """

    images: np.ndarray  # (L, H, W, 3) float64
    lights: np.ndarray  # (L, 3) float64, unit length, lz >= 0
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.lights = np.asarray(self.lights, dtype=np.float64)
        if self.images.ndim != 4 or self.images.shape[3] != 3:
            raise DimensionMismatch(
                f"images must be (L, H, W, 3), got {self.images.shape}"
            )
        if self.lights.shape != (self.images.shape[0], 3):
            raise DimensionMismatch(
                f"{self.images.shape[0]} frames but {self.lights.shape[0]} lights"
            )
        if self.images.shape[0] < 1:
            raise DimensionMismatch("collection must hold at least one frame")
        if not self.names:
            self.names = [f"light_{i:03d}.png" for i in range(self.images.shape[0])]

    @property
    def n_lights(self) -> int:
        return self.images.shape[0]

    @property
    def height(self) -> int:
        return self.images.shape[1]

    @property
    def width(self) -> int:
        return self.images.shape[2]

    def light_directions(self) -> list[LightDirection]:
        return [LightDirection.from_array(v) for v in self.lights]

    def elevations_deg(self) -> np.ndarray:
        return np.degrees(np.arcsin(np.clip(self.lights[:, 2], -1.0, 1.0)))


@dataclass(frozen=True)
class PixelSampleSet:
    """Sampled (row, col) pixel coordinates and the share of pixels they cover."""

    indices: np.ndarray  # (P, 2) int, rows then cols
    fraction: float

    def __len__(self) -> int:
        return int(self.indices.shape[0])


@dataclass(frozen=True)
class SplitSpec:
    """Disjoint train/test index lists into an MLIC's light array."""

    train_indices: np.ndarray
    test_indices: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "train_indices", np.asarray(self.train_indices, dtype=np.intp)
        )
        object.__setattr__(
            self, "test_indices", np.asarray(self.test_indices, dtype=np.intp)
        )
        if np.intersect1d(self.train_indices, self.test_indices).size:
            raise ValueError("train and test light indices overlap")

    @staticmethod
    def all_train(n_lights: int) -> "SplitSpec":
        return SplitSpec(np.arange(n_lights), np.array([], dtype=np.intp))


@dataclass
class TrainingTable:
    """Per-pixel training rows: colors under every train light + light xy.

    ``colors[p, j]`` is the RGB of sampled pixel p under train light j;
    flattened encoder inputs interleave by light: [R0 G0 B0 R1 G1 B1 ...].
    """

    colors: np.ndarray  # (P, L_train, 3)
    lights_xy: np.ndarray  # (L_train, 2)
    pixel_indices: np.ndarray  # (P, 2)

    @property
    def n_rows(self) -> int:
        return int(self.colors.shape[0])

    @property
    def n_lights(self) -> int:
        return int(self.colors.shape[1])

    def encoder_inputs(self) -> np.ndarray:
        return self.colors.reshape(self.n_rows, self.n_lights * 3)


def _parse_lp_line(path, line_no, line):
    tokens = line.split()
    if len(tokens) < 4:
        raise MalformedLpLine(path, line_no, f"expected 'name lx ly lz', got {line!r}")
    name = " ".join(tokens[:-3])
    try:
        vec = np.array([float(t) for t in tokens[-3:]], dtype=np.float64)
    except ValueError:
        raise MalformedLpLine(path, line_no, f"non-numeric direction in {line!r}")
    return name, vec


def read_lp(lp_file) -> tuple[list[str], np.ndarray]:
    """Parse a .lp file into (image names, (L, 3) unit light directions).

    Off-unit vectors are renormalized (logged when the deviation exceeds
    1e-3); a below-horizon direction (lz < 0) is rejected outright.
    """
    lp_file = Path(lp_file)
    if not lp_file.is_file():
        raise MissingFile(f"lp file not found: {lp_file}")
    lines = lp_file.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise MalformedLpLine(lp_file, 1, "empty file")
    try:
        count = int(lines[0].split()[0])
    except (ValueError, IndexError):
        raise MalformedLpLine(lp_file, 1, f"expected a frame count, got {lines[0]!r}")

    names, vecs = [], []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        name, vec = _parse_lp_line(lp_file, line_no, line)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise MalformedLpLine(lp_file, line_no, "zero-length light direction")
        if vec[2] < 0:
            raise NonHemisphericalLight(
                f"{lp_file}:{line_no}: light {name} has lz={vec[2]:.6f} < 0"
            )
        if abs(norm - 1.0) > 1e-3:
            log.info("renormalizing light %s: |v| = %.6f", name, norm)
        names.append(name)
        vecs.append(vec / norm)
    if len(names) != count:
        raise MalformedLpLine(
            lp_file, 1, f"header says {count} entries, found {len(names)}"
        )
    return names, np.array(vecs, dtype=np.float64)


def write_lp(lp_file, names, lights) -> None:
    """Write a .lp file; directions keep 6 decimal places."""
    lights = np.asarray(lights, dtype=np.float64)
    lines = [str(len(names))]
    for name, (lx, ly, lz) in zip(names, lights):
        lines.append(f"{name} {lx:.6f} {ly:.6f} {lz:.6f}")
    Path(lp_file).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _load_frame(path) -> np.ndarray:
    if not Path(path).is_file():
        raise MissingFile(f"image not found: {path}")
    with Image.open(path) as img:
        rgb = img.convert("RGB")
        return np.asarray(rgb, dtype=np.float64) / 255.0


def load_mlic(image_dir, lp_file) -> MLIC:
    """Load a collection from a directory of PNG frames plus a .lp file.

    Args:
        image_dir: directory holding the frames named in the .lp file.
        lp_file: light-directions file; entries resolve against image_dir
            unless they are absolute paths.
    """
    image_dir = Path(image_dir)
    names, lights = read_lp(lp_file)
    frames = []
    shape = None
    for name in names:
        path = Path(name) if Path(name).is_absolute() else image_dir / name
        frame = _load_frame(path)
        if shape is None:
            shape = frame.shape
        elif frame.shape != shape:
            raise DimensionMismatch(
                f"{name} is {frame.shape[1]}x{frame.shape[0]}, "
                f"expected {shape[1]}x{shape[0]}"
            )
        frames.append(frame)
    return MLIC(images=np.stack(frames, axis=0), lights=lights, names=names)


def save_mlic(mlic: MLIC, out_dir, lp_name: str = "lights.lp") -> Path:
    """Write a collection as 8-bit PNG frames plus a .lp file."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, frame in zip(mlic.names, mlic.images):
        data = np.clip(np.round(frame * 255.0), 0, 255).astype(np.uint8)
        Image.fromarray(data, mode="RGB").save(out_dir / name)
    write_lp(out_dir / lp_name, mlic.names, mlic.lights)
    return out_dir / lp_name


def split_by_elevation(
    mlic: MLIC, test_elevations_deg, tolerance_deg: float = 5.0
) -> SplitSpec:
    """Route lights near any listed test elevation to the test set.

    A light goes to the test set when its elevation is within
    ``tolerance_deg`` of any entry in ``test_elevations_deg``; everything
    else trains. Raises EmptyTrainSet when no light is left to train on;
    an empty test set only logs a warning.
    """
    if tolerance_deg <= 0:
        raise ValueError("tolerance_deg must be positive")
    test_elevations = np.atleast_1d(np.asarray(test_elevations_deg, dtype=np.float64))
    elev = mlic.elevations_deg()
    is_test = np.zeros(mlic.n_lights, dtype=bool)
    for target in test_elevations:
        is_test |= np.abs(elev - target) <= tolerance_deg
    train_idx = np.nonzero(~is_test)[0]
    test_idx = np.nonzero(is_test)[0]
    if train_idx.size == 0:
        raise EmptyTrainSet(
            "every light falls within tolerance of a test elevation"
        )
    if test_idx.size == 0:
        log.warning(
            "no lights within %.1f deg of test elevations %s",
            tolerance_deg,
            test_elevations.tolist(),
        )
    return SplitSpec(train_indices=train_idx, test_indices=test_idx)


def sample_pixels(
    mlic: MLIC,
    fraction: float | None = None,
    strategy: str = "uniform_random",
    *,
    seed: int = 0,
    step: int | None = None,
) -> PixelSampleSet:
    """Pick a subset of pixel coordinates for training.

    ``uniform_random`` draws round(fraction * H * W) pixels without
    replacement using the given seed. ``regular_grid`` takes the top-left
    pixel of every step x step tile (fraction 1 / step**2); ``fraction``
    is ignored for the grid.
    """
    h, w = mlic.height, mlic.width
    if strategy == "uniform_random":
        if fraction is None or not (0.0 < fraction <= 1.0):
            raise FractionOutOfRange(f"fraction must be in (0, 1], got {fraction}")
        count = int(round(fraction * h * w))
        count = max(1, min(count, h * w))
        rng = np.random.default_rng(seed)
        flat = rng.choice(h * w, size=count, replace=False)
        rows, cols = np.unravel_index(flat, (h, w))
        indices = np.stack([rows, cols], axis=1).astype(np.intp)
        return PixelSampleSet(indices=indices, fraction=count / (h * w))
    if strategy == "regular_grid":
        if step is None or step < 1:
            raise ValueError(f"regular_grid needs step >= 1, got {step}")
        rows, cols = np.meshgrid(
            np.arange(0, h, step), np.arange(0, w, step), indexing="ij"
        )
        indices = np.stack([rows.ravel(), cols.ravel()], axis=1).astype(np.intp)
        return PixelSampleSet(indices=indices, fraction=indices.shape[0] / (h * w))
    raise ValueError(f"unknown sampling strategy {strategy!r}")


def gather_training_rows(
    mlic: MLIC, samples: PixelSampleSet, split: SplitSpec
) -> TrainingTable:
    """Assemble the per-pixel training table over the train lights.

    Row order follows ``samples.indices``; columns follow
    ``split.train_indices``.
    """
    train_idx = split.train_indices
    rows = samples.indices[:, 0]
    cols = samples.indices[:, 1]
    # (L_train, P, 3) -> (P, L_train, 3)
    colors = mlic.images[train_idx][:, rows, cols, :].transpose(1, 0, 2)
    lights_xy = mlic.lights[train_idx][:, :2]
    return TrainingTable(
        colors=np.ascontiguousarray(colors),
        lights_xy=np.ascontiguousarray(lights_xy),
        pixel_indices=samples.indices.copy(),
    )
