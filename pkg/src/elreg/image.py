"""Raster type, derivatives, interpolation and warping."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch, DimensionTooSmall, ImageError, ScaleMismatch, SingularTransform
from .transforms import AffineParams, DeformationField


class Scale(enum.Enum):
    IMAGE = "image"
    STANDARD = "standard"


class InterpMethod(enum.Enum):
    BILINEAR = "bilinear"
    CUBIC = "cubic"

    @classmethod
    def parse(cls, value) -> InterpMethod:
        if isinstance(value, cls):
            return value
        aliases = {"linear": cls.BILINEAR, "bilinear": cls.BILINEAR, "cubic": cls.CUBIC, "spline": cls.CUBIC}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown interpolation method {value!r}") from None


@dataclass(frozen=True, eq=False)
class ImageGrid:
    """Immutable 2D intensity raster, ``data[y, x]``."""

    data: np.ndarray
    scale: Scale = Scale.IMAGE

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 2 or data.size == 0:
            raise ImageError(f"image data must be a non-empty 2D array, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ImageError("image contains NaN or Inf")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def with_data(self, data, scale: Scale | None = None) -> ImageGrid:
        return ImageGrid(data, self.scale if scale is None else scale)

    def __getitem__(self, key):
        return self.data[key]


@dataclass(frozen=True, eq=False)
class GradientTriple:
    fx: np.ndarray
    fy: np.ndarray
    ft: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.fx.shape


def _check_same_shape(a, b) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimensions differ: {a.shape[::-1]} vs {b.shape[::-1]} (w, h)")


def spatial_gradients(img: ImageGrid) -> tuple[np.ndarray, np.ndarray]:
    """Central differences inside, one-sided differences on the border."""
    if img.width < 3 or img.height < 3:
        raise DimensionTooSmall(f"need at least 3x3 pixels for gradients, got {img.width}x{img.height}")
    fy, fx = np.gradient(img.data)
    return fx, fy


def temporal_gradient(source: ImageGrid, target: ImageGrid) -> np.ndarray:
    _check_same_shape(source, target)
    if source.scale is not target.scale:
        raise ScaleMismatch(f"source is on {source.scale.value} scale, target on {target.scale.value} scale")
    return source.data - target.data


def gradient_triple(source: ImageGrid, target: ImageGrid, scale: float = 1.0) -> GradientTriple:
    """Derivatives for the linearized error between ``source`` and ``target``.

    Spatial derivatives are the average of both images' gradients, which
    keeps the first-order model accurate whichever image the motion is
    referred to. All three derivatives are divided by ``scale``.
    """
    ft = temporal_gradient(source, target)
    sx, sy = spatial_gradients(source)
    tx, ty = spatial_gradients(target)
    inv = 1.0 / scale
    return GradientTriple(0.5 * (sx + tx) * inv, 0.5 * (sy + ty) * inv, ft * inv)


def sample(data: np.ndarray, xs, ys, method=InterpMethod.CUBIC) -> np.ndarray:
    """Evaluate the interpolant of ``data`` at arbitrary coordinates.

    Coordinates outside the grid are clamped to the border (edge extension).
    The cubic method is an interpolating B-spline (coefficients prefiltered),
    so it reproduces the samples at integer positions.
    """
    method = InterpMethod.parse(method)
    h, w = data.shape
    xs = np.clip(np.asarray(xs, dtype=float), 0.0, w - 1.0)
    ys = np.clip(np.asarray(ys, dtype=float), 0.0, h - 1.0)
    order = 1 if method is InterpMethod.BILINEAR else 3
    out = ndimage.map_coordinates(data, [ys, xs], order=order, mode="nearest", prefilter=order > 1)
    # the spline is exact at the knots only up to rounding; return stored samples there
    ix, iy = np.rint(xs), np.rint(ys)
    on_grid = (ix == xs) & (iy == ys)
    if np.any(on_grid):
        out[on_grid] = data[iy[on_grid].astype(np.intp), ix[on_grid].astype(np.intp)]
    return out


def interpolate(img: ImageGrid, x: float, y: float, method=InterpMethod.CUBIC) -> float:
    return float(sample(img.data, np.array([x]), np.array([y]), method)[0])


def warp_affine(img: ImageGrid, A: AffineParams, method=InterpMethod.CUBIC) -> ImageGrid:
    """Backward warp: ``out(v) = img(A v)``. Output is on the image scale."""
    if abs(A.det()) <= 1e-12:
        raise SingularTransform(f"affine linear part is singular (det={A.det():.3g})")
    y, x = np.mgrid[0 : img.height, 0 : img.width].astype(float)
    xs, ys = A.apply(x, y)
    return ImageGrid(sample(img.data, xs, ys, method), Scale.IMAGE)


def warp_field(img: ImageGrid, field: DeformationField, method=InterpMethod.CUBIC) -> ImageGrid:
    """Backward warp: ``out(v) = img(v + u(v))``. Output is on the image scale."""
    _check_same_shape(img, field)
    y, x = np.mgrid[0 : img.height, 0 : img.width].astype(float)
    return ImageGrid(sample(img.data, x + field.ux, y + field.uy, method), Scale.IMAGE)


def mse(a: ImageGrid, b: ImageGrid) -> float:
    """Mean squared intensity difference (callers normalize to [0, 1] first)."""
    _check_same_shape(a, b)
    d = a.data - b.data
    return float(np.mean(d * d))


def normalized_mse(a: ImageGrid, b: ImageGrid, scale_max: float) -> float:
    """MSE after dividing both images by ``scale_max``."""
    if scale_max <= 0:
        raise ValueError("scale_max must be positive")
    _check_same_shape(a, b)
    d = (a.data - b.data) / scale_max
    return float(np.mean(d * d))
