"""Image-quality metrics for relight evaluation: PSNR, SSIM, CIE76 delta-E.

All three take sRGB-encoded images in [0, 1]. PSNR uses peak 1. SSIM runs
on Rec. 709 luminance with the standard 11x11 Gaussian window (sigma 1.5,
K1=0.01, K2=0.03) and averages the map over the interior where the window
fits entirely — border pixels never enter the score. Delta-E is the CIE76
Euclidean distance in CIELAB after the IEC 61966-2-1 transfer and a D65
XYZ conversion; ~1 unit is a just-noticeable difference.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from .errors import DimensionMismatch, ImageTooSmall
from .mlic import LightDirection

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
REC709_WEIGHTS = np.array([0.2126, 0.7152, 0.0722])

# sRGB (D65) linear RGB -> XYZ
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_D65_WHITE = np.array([0.95047, 1.0, 1.08883])


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB for [0, 1] images (peak 1.0).

    Returns math.inf when the images are identical.
    """
    a, b = _check_pair(a, b)
    mse = float(np.mean(np.square(a - b)))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _luminance(img: np.ndarray) -> np.ndarray:
    if img.ndim == 3:
        return img @ REC709_WEIGHTS
    return img


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def _local_mean(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    return fftconvolve(img, kernel, mode="valid")


def ssim(a, b) -> float:
    """Mean structural similarity on luminance, Gaussian-weighted windows."""
    a, b = _check_pair(a, b)
    x = _luminance(a)
    y = _luminance(b)
    if min(x.shape) < SSIM_WINDOW:
        raise ImageTooSmall(
            f"SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {x.shape}"
        )
    kernel = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    mu_x = _local_mean(x, kernel)
    mu_y = _local_mean(y, kernel)
    var_x = _local_mean(x * x, kernel) - mu_x**2
    var_y = _local_mean(y * y, kernel) - mu_y**2
    cov = _local_mean(x * y, kernel) - mu_x * mu_y
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def srgb_to_linear(srgb: np.ndarray) -> np.ndarray:
    srgb = np.asarray(srgb, dtype=np.float64)
    return np.where(srgb <= 0.04045, srgb / 12.92, ((srgb + 0.055) / 1.055) ** 2.4)


def rgb_to_lab(srgb: np.ndarray) -> np.ndarray:
    """sRGB [0, 1] -> CIELAB (D65 white)."""
    linear = srgb_to_linear(srgb)
    xyz = linear @ _RGB_TO_XYZ.T
    ratio = xyz / _D65_WHITE
    delta = 6.0 / 29.0
    f = np.where(
        ratio > delta**3, np.cbrt(ratio), ratio / (3.0 * delta**2) + 4.0 / 29.0
    )
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def delta_e(a, b) -> float:
    """Mean CIE76 color difference between two sRGB images."""
    a, b = _check_pair(a, b)
    diff = rgb_to_lab(a) - rgb_to_lab(b)
    return float(np.mean(np.linalg.norm(diff, axis=-1)))


@dataclass
class DirectionScore:
    light: LightDirection
    psnr_db: float
    ssim: float
    delta_e_mean: float


@dataclass
class QualityReport:
    """Per-test-direction scores plus their means.

    Finite PSNR means are computed over the finite entries; an all-identical
    comparison reports infinity.
    """

    per_direction: list[DirectionScore] = field(default_factory=list)
    delta_e_formula: str = "cie76"

    def add(self, light: LightDirection, predicted, truth) -> DirectionScore:
        """Score one direction; inputs are clamped to [0, 1] first, matching
        what a viewer would display."""
        pred = np.clip(predicted, 0.0, 1.0)
        gt = np.clip(truth, 0.0, 1.0)
        score = DirectionScore(
            light=light,
            psnr_db=psnr(gt, pred),
            ssim=ssim(gt, pred),
            delta_e_mean=delta_e(gt, pred),
        )
        self.per_direction.append(score)
        return score

    @property
    def mean_psnr(self) -> float:
        values = [s.psnr_db for s in self.per_direction]
        finite = [v for v in values if math.isfinite(v)]
        if not finite:
            return math.inf if values else math.nan
        return float(np.mean(finite))

    @property
    def mean_ssim(self) -> float:
        return float(np.mean([s.ssim for s in self.per_direction]))

    @property
    def mean_delta_e(self) -> float:
        return float(np.mean([s.delta_e_mean for s in self.per_direction]))

    def to_rows(self) -> list[dict]:
        rows = []
        for s in self.per_direction:
            rows.append(
                {
                    "lx": s.light.lx,
                    "ly": s.light.ly,
                    "lz": s.light.lz,
                    "elevation_deg": s.light.elevation_deg,
                    "psnr_db": s.psnr_db,
                    "ssim": s.ssim,
                    "delta_e_mean": s.delta_e_mean,
                }
            )
        return rows

    def write_csv(self, path) -> None:
        rows = self.to_rows()
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(
                fh,
                fieldnames=[
                    "lx",
                    "ly",
                    "lz",
                    "elevation_deg",
                    "psnr_db",
                    "ssim",
                    "delta_e_mean",
                ],
            )
            writer.writeheader()
            writer.writerows(rows)

    def to_json_dict(self) -> dict:
        def _num(v):
            return None if not math.isfinite(v) else v

        rows = self.to_rows()
        for row in rows:
            row["psnr_infinite"] = not math.isfinite(row["psnr_db"])
            row["psnr_db"] = _num(row["psnr_db"])
        return {
            "delta_e_formula": self.delta_e_formula,
            "per_direction": rows,
            "aggregate": {
                "psnr_db": _num(self.mean_psnr),
                "psnr_infinite": not math.isfinite(self.mean_psnr),
                "ssim": self.mean_ssim,
                "delta_e_mean": self.mean_delta_e,
            },
        }

    def write_json(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
