"""Synthetic test data: a textured head phantom, random affine and random
sinusoidal warps normalized to a target r.m.s. displacement, and monotone
intensity perturbations.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import InvalidParams
from .image import ImageGrid
from .transforms import AffineParams, DeformationField

# draw ranges for the sinusoidal warp parameters; final amplitude is set by rescaling
N1_RANGE = (0.95, 1.05)
N5_RANGE = (-0.05, 0.05)
AMP_EXP_RANGE = (0.0, 2.0)
WAVELENGTH_FRACTION = (0.08, 0.16)


class WarpKind(enum.Enum):
    AFFINE = "affine"
    NONLINEAR = "nonlinear"


@dataclass(frozen=True)
class WarpSpec:
    kind: WarpKind
    rms_target: float = 12.0
    seed: int = 0
    affine: AffineParams | None = None
    n: tuple[float, ...] | None = field(default=None)

    def __post_init__(self):
        if self.rms_target <= 0:
            raise InvalidParams("rms_target must be positive")
        if self.kind is WarpKind.NONLINEAR and self.n is not None:
            if len(self.n) != 8 or self.n[3] == 0 or self.n[7] == 0:
                raise InvalidParams("nonlinear warps need eight parameters with n4, n8 != 0")


def phantom(size: int = 256, seed: int = 0, height: int | None = None) -> ImageGrid:
    """Head-like test image with a bimodal histogram.

    Dark background, a bright rim, and textured tissue with a few dark
    cavities. Intensities are on an arbitrary scanner-like scale (~0..1000).
    """
    width, height = size, height or size
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:height, 0:width].astype(float)
    cx, cy = (width - 1) / 2, (height - 1) / 2
    rx, ry = 0.40 * width, 0.44 * height
    r = np.sqrt(((x - cx) / rx) ** 2 + ((y - cy) / ry) ** 2)

    scale = size / 256.0
    coarse = ndimage.gaussian_filter(rng.standard_normal((height, width)), 6.0 * scale)
    fine = ndimage.gaussian_filter(rng.standard_normal((height, width)), 2.0 * scale)
    coarse /= coarse.std()
    fine /= fine.std()
    tissue = 560.0 + 70.0 * coarse + 45.0 * fine

    img = np.where(r < 1.0, tissue, 0.0)
    rim = (r >= 0.90) & (r < 1.0)
    img[rim] = 850.0 + 40.0 * fine[rim]
    for _ in range(4):
        bx = cx + rng.uniform(-0.45, 0.45) * rx
        by = cy + rng.uniform(-0.45, 0.45) * ry
        br = rng.uniform(0.06, 0.14) * min(rx, ry)
        blob = np.hypot(x - bx, y - by) < br
        img[blob] = 220.0 + 25.0 * fine[blob]
    img = ndimage.gaussian_filter(img, 0.8 * scale)
    img += rng.normal(0.0, 4.0, img.shape)
    return ImageGrid(np.clip(img, 0.0, None))


def _rms(ux: np.ndarray, uy: np.ndarray) -> float:
    return float(np.sqrt(np.mean(ux**2 + uy**2)))


def random_affine_warp(width: int, height: int, rms_target: float = 12.0, seed: int = 0) -> AffineParams:
    """Identity plus a uniform random perturbation, rescaled to ``rms_target``."""
    if rms_target <= 0:
        raise InvalidParams("rms_target must be positive")
    rng = np.random.default_rng(seed)
    pert = np.empty(6)
    pert[[0, 1, 3, 4]] = rng.uniform(-0.1, 0.1, 4)
    pert[[2, 5]] = rng.uniform(-10.0, 10.0, 2)
    y, x = np.mgrid[0:height, 0:width].astype(float)
    ux = pert[0] * x + pert[1] * y + pert[2]
    uy = pert[3] * x + pert[4] * y + pert[5]
    k = rms_target / _rms(ux, uy)
    return AffineParams.from_vector(np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0]) + k * pert)


def nonlinear_field(
    width: int,
    height: int,
    n,
    restore_y_identity: bool = False,
    amplitudes: tuple[float, float] | None = None,
) -> DeformationField:
    """Displacement of the sinusoidal warp

        x' = n1 x + (-1)^n2 e^n3 sin(y / n4)
        y' = n5 x + (-1)^n6 e^n7 cos(y / n8)

    evaluated literally, ``u = (x' - x, y' - y)``. As written the second
    coordinate has no ``y`` term, which collapses the rows onto a curve;
    ``restore_y_identity`` adds ``y`` back so that ``n5 x`` acts as a shear.
    ``amplitudes`` replaces the two ``e^n`` factors (useful for zeroing them).
    """
    n = np.asarray(n, dtype=float)
    if n.shape != (8,):
        raise InvalidParams(f"expected 8 warp parameters, got {n.size}")
    n1, n2, n3, n4, n5, n6, n7, n8 = n
    if n4 == 0 or n8 == 0:
        raise InvalidParams("n4 and n8 divide y and must be non-zero")
    ax, ay = (np.exp(n3), np.exp(n7)) if amplitudes is None else amplitudes
    y, x = np.mgrid[0:height, 0:width].astype(float)
    xp = n1 * x + (-1.0) ** n2 * ax * np.sin(y / n4)
    yp = n5 * x + (-1.0) ** n6 * ay * np.cos(y / n8)
    if restore_y_identity:
        yp = yp + y
    return DeformationField(xp - x, yp - y)


def draw_nonlinear_params(width: int, height: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    n1 = rng.uniform(*N1_RANGE)
    n2 = float(rng.integers(0, 2))
    n3 = rng.uniform(*AMP_EXP_RANGE)
    n4 = rng.uniform(*WAVELENGTH_FRACTION) * height
    n5 = rng.uniform(*N5_RANGE)
    n6 = float(rng.integers(0, 2))
    n7 = rng.uniform(*AMP_EXP_RANGE)
    n8 = rng.uniform(*WAVELENGTH_FRACTION) * height
    return np.array([n1, n2, n3, n4, n5, n6, n7, n8])


def random_nonlinear_warp(width: int, height: int, rms_target: float = 12.0, seed: int = 0) -> DeformationField:
    if rms_target <= 0:
        raise InvalidParams("rms_target must be positive")
    n = draw_nonlinear_params(width, height, seed)
    u = nonlinear_field(width, height, n, restore_y_identity=True)
    return u.scaled(rms_target / u.rms())


def perturb_intensity(img: ImageGrid, seed: int = 0, gamma_range=(0.7, 1.4)) -> ImageGrid:
    """Random monotone remapping: gamma on the normalized range, then gain and offset."""
    rng = np.random.default_rng(seed)
    gamma = rng.uniform(*gamma_range)
    gain = rng.uniform(0.8, 1.25)
    offset = rng.uniform(0.0, 60.0)
    top = float(img.data.max())
    if top <= 0:
        return img
    out = top * (img.data / top) ** gamma * gain + offset
    return ImageGrid(out, img.scale)
