"""Classical relighting baselines: LRGB polynomial texture maps and
hemispherical harmonics, fit per pixel by linear least squares.

Both fits share one orthogonal factorization of the light design matrix
across all pixels (every pixel sees the same light set). PTM here is the
LRGB flavor: six luminance coefficients plus a static unit-sum chroma,
nine values per pixel. The HSH basis is built by shifting the real
spherical harmonics onto the upper hemisphere and renormalizing, which
makes it orthonormal under the uniform solid-angle measure — the property
the tests pin down, rather than any published coefficient table.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, OrderUnsupported, RankDeficientLights
from .mlic import MLIC, LightDirection, SplitSpec

PTM_TERMS = 6
SUPPORTED_HSH_ORDERS = (1, 2, 3)
_BLACK_EPS = 1e-12


@dataclass
class PTMMap:
    """Per-pixel luminance polynomial + static chroma.

    poly[..., :] multiplies [lx^2, ly^2, lx*ly, lx, ly, 1]; chroma is the
    pixel's mean color normalized to unit sum (zero where the pixel is
    black across every train light).
    """

    poly: np.ndarray  # (H, W, 6)
    chroma: np.ndarray  # (H, W, 3)
    black_mask: np.ndarray  # (H, W) bool, True where chroma is undefined

    method = "ptm-lrgb"

    @property
    def coeffs_per_pixel(self) -> int:
        return PTM_TERMS + 3


@dataclass
class HSHMap:
    """Per-pixel, per-channel hemispherical-harmonic coefficients."""

    coeffs: np.ndarray  # (H, W, 3, order^2)
    order: int

    method = "hsh-3"

    @property
    def coeffs_per_pixel(self) -> int:
        return 3 * self.order**2


def ptm_design_row(light: LightDirection) -> np.ndarray:
    """[lx^2, ly^2, lx*ly, lx, ly, 1] for one unit light."""
    lx, ly = light.lx, light.ly
    return np.array([lx * lx, ly * ly, lx * ly, lx, ly, 1.0])


def ptm_design_matrix(lights: np.ndarray) -> np.ndarray:
    lx, ly = lights[:, 0], lights[:, 1]
    return np.stack([lx * lx, ly * ly, lx * ly, lx, ly, np.ones_like(lx)], axis=1)


def hsh_basis(order: int, light: LightDirection) -> np.ndarray:
    """Evaluate the order^2 hemispherical-harmonic basis at one direction."""
    if order not in SUPPORTED_HSH_ORDERS:
        raise OrderUnsupported(f"order must be one of {SUPPORTED_HSH_ORDERS}")
    return hsh_design_matrix(order, light.as_array()[None, :])[0]


def hsh_design_matrix(order: int, lights: np.ndarray) -> np.ndarray:
    """Basis rows for (L, 3) unit directions with lz >= 0.

    Construction: map the hemisphere onto the full sphere by shifting the
    polar cosine (z' = 2*lz - 1, azimuth kept), evaluate the real spherical
    harmonics there, and scale by sqrt(2) so the hemisphere integral of
    each squared basis function is 1. Ordering: degree-major
    [Y00, Y1-1, Y10, Y11, Y2-2, Y2-1, Y20, Y21, Y22].
    """
    if order not in SUPPORTED_HSH_ORDERS:
        raise OrderUnsupported(f"order must be one of {SUPPORTED_HSH_ORDERS}")
    lights = np.asarray(lights, dtype=np.float64)
    lz = np.clip(lights[:, 2], 0.0, 1.0)
    phi = np.arctan2(lights[:, 1], lights[:, 0])

    z = 2.0 * lz - 1.0
    s = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    x = s * np.cos(phi)
    y = s * np.sin(phi)

    root2 = np.sqrt(2.0)
    cols = [root2 * 0.5 * np.sqrt(1.0 / np.pi) * np.ones_like(z)]
    if order >= 2:
        c1 = root2 * np.sqrt(3.0 / (4.0 * np.pi))
        cols += [c1 * y, c1 * z, c1 * x]
    if order >= 3:
        c2 = root2 * 0.5 * np.sqrt(15.0 / np.pi)
        c20 = root2 * 0.25 * np.sqrt(5.0 / np.pi)
        c22 = root2 * 0.25 * np.sqrt(15.0 / np.pi)
        cols += [
            c2 * x * y,
            c2 * y * z,
            c20 * (3.0 * z * z - 1.0),
            c2 * x * z,
            c22 * (x * x - y * y),
        ]
    return np.stack(cols, axis=1)


def _shared_lstsq(design: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Least squares via one thin-QR factorization shared across columns.

    design is (L, M), rhs is (L, P); returns (M, P). Raises when the light
    set cannot determine the basis (rank < M).
    """
    n_lights, n_terms = design.shape
    if n_lights < n_terms or np.linalg.matrix_rank(design) < n_terms:
        raise RankDeficientLights(
            f"{n_lights} train lights cannot fix {n_terms} coefficients"
        )
    q, r = np.linalg.qr(design)
    return solve_triangular(r, q.T @ rhs)


def fit_ptm(mlic: MLIC, split: SplitSpec) -> PTMMap:
    """Fit per-pixel luminance polynomials plus static chroma.

    Luminance is the channel mean; chroma is the pixel's mean train color
    scaled to unit sum. Entirely black pixels get zero chroma and are
    flagged rather than dividing by zero.
    """
    train_idx = split.train_indices
    design = ptm_design_matrix(mlic.lights[train_idx])
    h, w = mlic.height, mlic.width
    frames = mlic.images[train_idx]  # (L, H, W, 3)
    luminance = frames.mean(axis=3).reshape(len(train_idx), h * w)
    coeffs = _shared_lstsq(design, luminance)
    poly = coeffs.T.reshape(h, w, PTM_TERMS)

    mean_rgb = frames.mean(axis=0)  # (H, W, 3)
    mean_lum = mean_rgb.mean(axis=2)
    black = mean_lum < _BLACK_EPS
    denom = np.where(black, 1.0, 3.0 * mean_lum)
    chroma = np.where(black[..., None], 0.0, mean_rgb / denom[..., None])
    return PTMMap(poly=poly, chroma=chroma, black_mask=black)


def fit_hsh(mlic: MLIC, split: SplitSpec, order: int = 3) -> HSHMap:
    """Per-channel least squares against the order^2 hemispherical basis."""
    if order not in SUPPORTED_HSH_ORDERS:
        raise OrderUnsupported(f"order must be one of {SUPPORTED_HSH_ORDERS}")
    train_idx = split.train_indices
    design = hsh_design_matrix(order, mlic.lights[train_idx])
    h, w = mlic.height, mlic.width
    rhs = mlic.images[train_idx].reshape(len(train_idx), h * w * 3)
    coeffs = _shared_lstsq(design, rhs)  # (order^2, H*W*3)
    return HSHMap(
        coeffs=coeffs.T.reshape(h, w, 3, order**2).copy(), order=order
    )


def relight_classical(pixel_map, light: LightDirection) -> np.ndarray:
    """Relight a fitted map under one direction; returns (H, W, 3) in [0, 1].

    PTM: fitted luminance (clamped at zero here, never during fitting)
    times 3x the static chroma. HSH: per-channel basis dot product.
    """
    if isinstance(pixel_map, PTMMap):
        basis = ptm_design_row(light)
        luminance = np.clip(pixel_map.poly @ basis, 0.0, None)
        rgb = luminance[..., None] * 3.0 * pixel_map.chroma
    elif isinstance(pixel_map, HSHMap):
        basis = hsh_design_matrix(pixel_map.order, light.as_array()[None, :])[0]
        rgb = pixel_map.coeffs @ basis
    else:
        raise DimensionMismatch(f"cannot relight {type(pixel_map).__name__}")
    return np.clip(rgb, 0.0, 1.0)


def hemisphere_quadrature(n_points: int = 100_000) -> tuple[np.ndarray, np.ndarray]:
    """Product quadrature over the upper hemisphere in solid-angle measure.

    Solid angle factorizes as dz * dphi for z in [0, 1]; Gauss-Legendre
    nodes in z crossed with equally spaced azimuths integrate the basis
    products essentially exactly. Returns ((N, 3) directions, (N,) weights)
    with N >= n_points and weights summing to 2*pi.
    """
    n_phi = max(8, int(np.ceil(np.sqrt(1.6 * n_points))))
    n_z = int(np.ceil(n_points / n_phi))
    nodes, weights = np.polynomial.legendre.leggauss(n_z)
    z = 0.5 * (nodes + 1.0)  # [-1, 1] -> [0, 1]
    wz = 0.5 * weights
    phi = 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    w_phi = 2.0 * np.pi / n_phi

    zz, pp = np.meshgrid(z, phi, indexing="ij")
    s = np.sqrt(np.clip(1.0 - zz * zz, 0.0, None))
    dirs = np.stack(
        [(s * np.cos(pp)).ravel(), (s * np.sin(pp)).ravel(), zz.ravel()], axis=1
    )
    w = np.repeat(wz, n_phi) * w_phi
    return dirs, w


def hsh_gram_matrix(order: int, n_points: int = 100_000) -> np.ndarray:
    """Quadrature Gram matrix of the basis over the hemisphere; equals the
    identity when the basis is orthonormal."""
    dirs, weights = hemisphere_quadrature(n_points)
    basis = hsh_design_matrix(order, dirs)
    return (basis * weights[:, None]).T @ basis
