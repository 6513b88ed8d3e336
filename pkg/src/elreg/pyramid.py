"""Gaussian pyramids and transfer of transforms between adjacent levels.

Level ``k`` pixel ``(x, y)`` sits at ``(2x, 2y)`` on level ``k + 1``, so
coordinates double on the way to the finer level.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch, TooManyLevels
from .image import ImageGrid, InterpMethod, sample
from .transforms import AffineParams, DeformationField

BINOMIAL5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
MIN_LEVEL_SIZE = 8


def reduce(img: ImageGrid) -> ImageGrid:
    """Binomial blur (edge-clamped) followed by keeping even-indexed samples."""
    blurred = ndimage.convolve1d(img.data, BINOMIAL5, axis=0, mode="nearest")
    blurred = ndimage.convolve1d(blurred, BINOMIAL5, axis=1, mode="nearest")
    return img.with_data(blurred[::2, ::2])


def level_sizes(width: int, height: int, depth: int) -> list[tuple[int, int]]:
    """(width, height) of every level, coarsest first."""
    sizes = [(width, height)]
    for _ in range(depth - 1):
        w, h = sizes[0]
        sizes.insert(0, ((w + 1) // 2, (h + 1) // 2))
    return sizes


def max_depth(width: int, height: int) -> int:
    depth = 1
    while min(level_sizes(width, height, depth + 1)[0]) >= MIN_LEVEL_SIZE:
        depth += 1
    return depth


@dataclass(frozen=True)
class GaussianPyramid:
    levels: tuple[ImageGrid, ...]

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def coarsest(self) -> ImageGrid:
        return self.levels[0]

    @property
    def finest(self) -> ImageGrid:
        return self.levels[-1]

    def __getitem__(self, k: int) -> ImageGrid:
        return self.levels[k]

    def __iter__(self):
        return iter(self.levels)


def build_pyramid(img: ImageGrid, depth: int = 4) -> GaussianPyramid:
    if depth < 1:
        raise ValueError("pyramid depth must be at least 1")
    if depth > 1 and min(level_sizes(img.width, img.height, depth)[0]) < MIN_LEVEL_SIZE:
        raise TooManyLevels(
            f"{depth} levels would shrink {img.width}x{img.height} below "
            f"{MIN_LEVEL_SIZE}x{MIN_LEVEL_SIZE} (max {max_depth(img.width, img.height)})"
        )
    levels = [img]
    for _ in range(depth - 1):
        levels.insert(0, reduce(levels[0]))
    return GaussianPyramid(tuple(levels))


def clamp_depth(width: int, height: int, depth: int) -> int:
    """Largest usable depth not exceeding ``depth``; warns when it had to shrink."""
    usable = min(depth, max_depth(width, height))
    if usable < depth:
        warnings.warn(f"pyramid depth reduced from {depth} to {usable} for a {width}x{height} image", stacklevel=2)
    return usable


def promote_affine(A: AffineParams) -> AffineParams:
    return AffineParams(A.a1, A.a2, 2.0 * A.a3, A.a4, A.a5, 2.0 * A.a6)


def demote_affine(A: AffineParams, levels: int = 1) -> AffineParams:
    f = 0.5**levels
    return AffineParams(A.a1, A.a2, f * A.a3, A.a4, A.a5, f * A.a6)


def promote_field(field: DeformationField, target_width: int, target_height: int) -> DeformationField:
    """Bilinear upsampling to the finer grid, displacements doubled."""
    if (target_width + 1) // 2 != field.width or (target_height + 1) // 2 != field.height:
        raise DimensionMismatch(
            f"cannot promote a {field.width}x{field.height} field to {target_width}x{target_height}"
        )
    y, x = np.mgrid[0:target_height, 0:target_width].astype(float)
    xs, ys = 0.5 * x, 0.5 * y
    ux = sample(field.ux, xs, ys, InterpMethod.BILINEAR)
    uy = sample(field.uy, xs, ys, InterpMethod.BILINEAR)
    return DeformationField(2.0 * ux, 2.0 * uy)
