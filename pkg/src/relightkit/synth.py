"""Synthetic desk-scale multi-light collections with controllable reflectance.

Scenes are heightfields shaded with a Lambert + Blinn-Phong model under a
fixed zenith camera, optionally with hard cast shadows from a heightfield
ray march. A light-dome layout generator provides the standard train/test
direction protocol (rings at {10,30,50,70,90} deg for training, rings at
{20,40,60,80} deg held out for testing).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch
from .mlic import MLIC

TRAIN_RING_ELEVATIONS = (10.0, 30.0, 50.0, 70.0, 90.0)
TRAIN_RING_COUNTS = (16, 13, 10, 9, 1)  # 49 lights, density thins toward zenith
TEST_RING_ELEVATIONS = (20.0, 40.0, 60.0, 80.0)
TEST_RING_COUNTS = (5, 5, 5, 5)

SCENE_NAMES = ("flat", "bumps", "mixed", "weave")


@dataclass(frozen=True)
class DomeSpec:
    """Concentric light rings: one elevation and light count per ring."""

    ring_elevations_deg: tuple[float, ...]
    ring_counts: tuple[int, ...]

    def __post_init__(self):
        elevs = self.ring_elevations_deg
        if len(elevs) != len(self.ring_counts):
            raise ValueError("one count per ring required")
        if any(c < 1 for c in self.ring_counts):
            raise ValueError("ring counts must be positive")
        if any(not (0.0 < e <= 90.0) for e in elevs):
            raise ValueError("ring elevations must lie in (0, 90]")
        if any(b <= a for a, b in zip(elevs, elevs[1:])):
            raise ValueError("ring elevations must be strictly increasing")


@dataclass
class SyntheticScene:
    """Heightfield + per-pixel albedo and shading weights.

    Weights are stored per pixel so multi-material scenes are just masks;
    ``shadowing`` switches the heightfield ray march on.
    """

    heightfield: np.ndarray  # (H, W)
    albedo: np.ndarray  # (H, W, 3)
    diffuse_weight: np.ndarray  # (H, W)
    specular_weight: np.ndarray  # (H, W)
    shininess: np.ndarray  # (H, W), > 0
    shadowing: bool = False

    def __post_init__(self):
        self.heightfield = np.asarray(self.heightfield, dtype=np.float64)
        self.albedo = np.asarray(self.albedo, dtype=np.float64)
        h, w = self.heightfield.shape
        for name in ("diffuse_weight", "specular_weight", "shininess"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim == 0:
                arr = np.full((h, w), float(arr))
            setattr(self, name, arr)
        if self.albedo.shape != (h, w, 3):
            raise DimensionMismatch(
                f"albedo is {self.albedo.shape}, heightfield is {h}x{w}"
            )
        if np.any(self.diffuse_weight < 0) or np.any(self.specular_weight < 0):
            raise ValueError("shading weights must be non-negative")
        if np.any(self.shininess <= 0):
            raise ValueError("shininess must be positive")


def dome_directions(spec: DomeSpec) -> np.ndarray:
    """Expand a dome spec into (N, 3) unit light directions.

    Each ring places its lights at equally spaced azimuths starting at 0 deg.
    """
    dirs = []
    for elev_deg, count in zip(spec.ring_elevations_deg, spec.ring_counts):
        elev = np.radians(elev_deg)
        z = np.sin(elev)
        r = np.cos(elev)
        azimuths = 2.0 * np.pi * np.arange(count) / count
        ring = np.stack(
            [r * np.cos(azimuths), r * np.sin(azimuths), np.full(count, z)], axis=1
        )
        dirs.append(ring)
    return np.concatenate(dirs, axis=0)


def default_light_protocol() -> tuple[np.ndarray, np.ndarray]:
    """Return (49 train directions, 20 test directions)."""
    train = dome_directions(DomeSpec(TRAIN_RING_ELEVATIONS, TRAIN_RING_COUNTS))
    test = dome_directions(DomeSpec(TEST_RING_ELEVATIONS, TEST_RING_COUNTS))
    return train, test


def surface_normals(heightfield: np.ndarray) -> np.ndarray:
    """Per-pixel unit normals from central differences (pixel spacing 1)."""
    gy, gx = np.gradient(heightfield)
    n = np.stack([-gx, -gy, np.ones_like(heightfield)], axis=-1)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def _shadow_mask(heightfield: np.ndarray, light: np.ndarray) -> np.ndarray:
    """True where the pixel sees the light; heightfield ray march otherwise.

    Marches one pixel per step along the light's horizontal direction;
    points leaving the image never occlude.
    """
    h, w = heightfield.shape
    lx, ly, lz = light
    horiz = float(np.hypot(lx, ly))
    if horiz < 1e-9:  # zenith light cannot be blocked by a heightfield
        return np.ones((h, w), dtype=bool)
    dx, dy = lx / horiz, ly / horiz
    rise = lz / horiz  # ray height gained per pixel of horizontal travel
    span = heightfield.max() - heightfield.min()
    if span <= 0:
        return np.ones((h, w), dtype=bool)
    max_steps = int(np.ceil(span / max(rise, 1e-6))) + 1
    max_steps = min(max_steps, int(np.hypot(h, w)) + 1)

    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
    visible = np.ones((h, w), dtype=bool)
    bias = 0.05 * span  # shadow-acne guard
    for k in range(1, max_steps + 1):
        # image row grows downward, scene y grows upward
        sample_rows = rows - k * dy
        sample_cols = cols + k * dx
        inside = (
            (sample_rows >= 0)
            & (sample_rows <= h - 1)
            & (sample_cols >= 0)
            & (sample_cols <= w - 1)
        )
        terrain = ndimage.map_coordinates(
            heightfield,
            [np.clip(sample_rows, 0, h - 1).ravel(), np.clip(sample_cols, 0, w - 1).ravel()],
            order=1,
            mode="nearest",
        ).reshape(h, w)
        ray_height = heightfield + k * rise + bias
        visible &= ~(inside & (terrain > ray_height))
    return visible


def render_mlic(scene: SyntheticScene, lights) -> MLIC:
    """Shade the scene once per light direction.

    Per pixel: albedo * diffuse_weight * max(0, n.l)
    + specular_weight * max(0, n.h)^shininess, with the half vector h built
    from a fixed (0,0,1) view; cast shadows zero the whole direct term.
    Output is clamped to [0, 1].
    """
    lights = np.asarray(lights, dtype=np.float64)
    h, w = scene.heightfield.shape
    normals = surface_normals(scene.heightfield)
    view = np.array([0.0, 0.0, 1.0])
    frames = np.empty((lights.shape[0], h, w, 3), dtype=np.float64)
    for i, light in enumerate(lights):
        n_dot_l = np.clip(normals @ light, 0.0, None)
        half = light + view
        half = half / np.linalg.norm(half)
        n_dot_h = np.clip(normals @ half, 0.0, None)
        diffuse = scene.albedo * (scene.diffuse_weight * n_dot_l)[..., None]
        specular = (scene.specular_weight * n_dot_h**scene.shininess)[..., None]
        color = diffuse + specular
        if scene.shadowing:
            color = color * _shadow_mask(scene.heightfield, light)[..., None]
        frames[i] = np.clip(color, 0.0, 1.0)
    return MLIC(images=frames, lights=lights)


def _gaussian_bump(h, w, row, col, sigma, height):
    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
    return height * np.exp(-((rows - row) ** 2 + (cols - col) ** 2) / (2 * sigma**2))


def make_scene(name: str, size: int = 128, seed: int = 0) -> SyntheticScene:
    """Build one of the stock scenes: flat, bumps, or mixed.

    flat: featureless mid-gray Lambertian plane.
    bumps: smooth bumps on a gray plane, mild gloss, cast shadows.
    mixed: colored albedo patches, matte and glossy regions, bumps and a
    ridge, cast shadows — the stress scene for high-frequency effects.
    """
    if name not in SCENE_NAMES:
        raise ValueError(f"unknown scene {name!r}, pick one of {SCENE_NAMES}")
    h = w = size
    rng = np.random.default_rng(seed)

    if name == "flat":
        return SyntheticScene(
            heightfield=np.zeros((h, w)),
            albedo=np.full((h, w, 3), 0.5),
            diffuse_weight=1.0,
            specular_weight=0.0,
            shininess=1.0,
            shadowing=False,
        )

    if name == "weave":
        # textile-like relief repeating exactly every 16x16 pixels: a
        # spatial subsample sees the same reflectance families the full
        # image does (sample it uniformly at random, not on a grid, or
        # the sampling lattice can alias against the weave period)
        rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
        relief = np.sin(2 * np.pi * rows / 8.0) * np.sin(2 * np.pi * cols / 8.0)
        cross = 0.4 * np.sin(2 * np.pi * (rows + cols) / 16.0)
        tint = 0.06 * np.sin(2 * np.pi * cols / 16.0)
        albedo = np.stack(
            [0.62 + tint, 0.55 + 0.5 * tint, 0.45 - tint], axis=-1
        )
        return SyntheticScene(
            heightfield=1.1 * (relief + cross),
            albedo=np.clip(albedo, 0, 1),
            diffuse_weight=0.9,
            specular_weight=0.25,
            shininess=24.0,
            shadowing=True,
        )

    if name == "bumps":
        height = np.zeros((h, w))
        for _ in range(4):
            row, col = rng.uniform(0.2, 0.8, size=2) * size
            sigma = rng.uniform(0.05, 0.12) * size
            amp = rng.uniform(0.4, 1.0) * 0.09 * size
            height += _gaussian_bump(h, w, row, col, sigma, amp)
        return SyntheticScene(
            heightfield=height,
            albedo=np.full((h, w, 3), 0.55),
            diffuse_weight=0.9,
            specular_weight=0.15,
            shininess=16.0,
            shadowing=True,
        )

    # mixed: dense bumps + a ridge, patchy albedo, four material families
    # spanning matte to mirror-like gloss; built to stress small decoders
    height = np.zeros((h, w))
    for _ in range(10):
        row, col = rng.uniform(0.1, 0.9, size=2) * size
        sigma = rng.uniform(0.02, 0.10) * size
        amp = rng.uniform(0.3, 1.0) * 0.08 * size
        height += _gaussian_bump(h, w, row, col, sigma, amp)
    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
    ridge = 0.05 * size * np.exp(-((cols - 0.3 * size) ** 2) / (2 * (0.03 * size) ** 2))
    ridge *= np.clip((rows - 0.15 * size) / (0.2 * size), 0, 1)
    ridge *= np.clip((0.9 * size - rows) / (0.2 * size), 0, 1)
    height = height + ridge

    palette = np.array(
        [
            [0.75, 0.35, 0.25],
            [0.30, 0.55, 0.70],
            [0.65, 0.60, 0.30],
            [0.45, 0.45, 0.50],
            [0.70, 0.30, 0.60],
            [0.25, 0.60, 0.35],
        ]
    )
    # smooth random label fields -> patchy albedo and material regions
    noise = rng.normal(size=(len(palette), h, w))
    smooth = np.stack([ndimage.gaussian_filter(n, 0.06 * size) for n in noise])
    albedo = palette[np.argmax(smooth, axis=0)]

    shin_levels = np.array([8.0, 32.0, 96.0, 256.0])
    spec_levels = np.array([0.05, 0.35, 0.7, 1.0])
    diff_levels = np.array([0.95, 0.85, 0.75, 0.65])
    noise2 = rng.normal(size=(4, h, w))
    smooth2 = np.stack([ndimage.gaussian_filter(n, 0.08 * size) for n in noise2])
    material = np.argmax(smooth2, axis=0)

    return SyntheticScene(
        heightfield=height,
        albedo=albedo,
        diffuse_weight=diff_levels[material],
        specular_weight=spec_levels[material],
        shininess=shin_levels[material],
        shadowing=True,
    )


def make_benchmark_mlic(
    scene_name: str = "mixed", size: int = 128, seed: int = 0
) -> MLIC:
    """Render a scene under the full 49-train + 20-test light protocol."""
    train, test = default_light_protocol()
    lights = np.concatenate([train, test], axis=0)
    scene = make_scene(scene_name, size=size, seed=seed)
    return render_mlic(scene, lights)
