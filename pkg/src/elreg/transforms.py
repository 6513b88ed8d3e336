"""Transform containers: global affine maps, per-pixel affine fields and
displacement fields.

Coordinates are pixel indices with the origin at the top-left sample,
``x`` along columns and ``y`` along rows. All maps are *backward*: a
transform ``A`` warps an image ``F`` into ``F(A v)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidParams, SingularTransform

IDENTITY6 = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])


@dataclass(frozen=True)
class AffineParams:
    """Six-parameter affine map ``[[a1, a2, a3], [a4, a5, a6], [0, 0, 1]]``.

    The intensity parameters of the full eight-parameter model are pinned
    (``a7 = 1``, ``a8 = 0``) because intensity differences are removed by
    standardization before registration.
    """

    a1: float = 1.0
    a2: float = 0.0
    a3: float = 0.0
    a4: float = 0.0
    a5: float = 1.0
    a6: float = 0.0

    @property
    def a7(self) -> float:
        return 1.0

    @property
    def a8(self) -> float:
        return 0.0

    @classmethod
    def identity(cls) -> AffineParams:
        return cls()

    @classmethod
    def translation(cls, tx: float, ty: float) -> AffineParams:
        return cls(a3=float(tx), a6=float(ty))

    @classmethod
    def from_vector(cls, a) -> AffineParams:
        a = np.asarray(a, dtype=float).ravel()
        if a.shape != (6,):
            raise InvalidParams(f"expected 6 affine parameters, got {a.size}")
        if not np.all(np.isfinite(a)):
            raise InvalidParams("affine parameters must be finite")
        return cls(*(float(v) for v in a))

    @classmethod
    def from_matrix(cls, m) -> AffineParams:
        m = np.asarray(m, dtype=float)
        return cls.from_vector(m[:2, :3].ravel())

    @classmethod
    def rotation(cls, angle: float, cx: float = 0.0, cy: float = 0.0) -> AffineParams:
        c, s = np.cos(angle), np.sin(angle)
        lin = np.array([[c, -s], [s, c]])
        t = np.array([cx, cy]) - lin @ np.array([cx, cy])
        return cls(lin[0, 0], lin[0, 1], t[0], lin[1, 0], lin[1, 1], t[1])

    def vector(self) -> np.ndarray:
        return np.array([self.a1, self.a2, self.a3, self.a4, self.a5, self.a6])

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.a1, self.a2, self.a3], [self.a4, self.a5, self.a6], [0.0, 0.0, 1.0]]
        )

    def det(self) -> float:
        return self.a1 * self.a5 - self.a2 * self.a4

    def inverse(self) -> AffineParams:
        if abs(self.det()) <= 1e-12:
            raise SingularTransform(f"affine linear part is singular (det={self.det():.3g})")
        return AffineParams.from_matrix(np.linalg.inv(self.matrix()))

    def __matmul__(self, other: AffineParams) -> AffineParams:
        # (self @ other) v == self(other(v))
        return AffineParams.from_matrix(self.matrix() @ other.matrix())

    def apply(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (self.a1 * x + self.a2 * y + self.a3, self.a4 * x + self.a5 * y + self.a6)

    def displacement(self, width: int, height: int) -> DeformationField:
        y, x = np.mgrid[0:height, 0:width].astype(float)
        xs, ys = self.apply(x, y)
        return DeformationField(xs - x, ys - y)


@dataclass(frozen=True, eq=False)
class DeformationField:
    """Per-pixel displacement ``u(v)``; the warped image samples at ``v + u(v)``."""

    ux: np.ndarray
    uy: np.ndarray

    def __post_init__(self):
        ux = np.ascontiguousarray(self.ux, dtype=float)
        uy = np.ascontiguousarray(self.uy, dtype=float)
        if ux.ndim != 2 or ux.shape != uy.shape:
            raise DimensionMismatch(f"field components disagree: {ux.shape} vs {uy.shape}")
        if not (np.all(np.isfinite(ux)) and np.all(np.isfinite(uy))):
            raise InvalidParams("displacement field contains non-finite values")
        ux.flags.writeable = False
        uy.flags.writeable = False
        object.__setattr__(self, "ux", ux)
        object.__setattr__(self, "uy", uy)

    @classmethod
    def zeros(cls, width: int, height: int) -> DeformationField:
        return cls(np.zeros((height, width)), np.zeros((height, width)))

    @property
    def width(self) -> int:
        return self.ux.shape[1]

    @property
    def height(self) -> int:
        return self.ux.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.ux.shape

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.ux, self.uy)

    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.ux**2 + self.uy**2)))

    def scaled(self, factor: float) -> DeformationField:
        return DeformationField(self.ux * factor, self.uy * factor)

    def __add__(self, other: DeformationField) -> DeformationField:
        return DeformationField(self.ux + other.ux, self.uy + other.uy)

    def __sub__(self, other: DeformationField) -> DeformationField:
        return DeformationField(self.ux - other.ux, self.uy - other.uy)


@dataclass(frozen=True, eq=False)
class LocalAffineField:
    """Per-pixel six-vector of affine parameters, shape ``(height, width, 6)``.

    Parameters are expressed in absolute pixel coordinates, so a spatially
    constant field equal to ``AffineParams.vector()`` describes that global map.
    """

    params: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(self.params, dtype=float)
        if p.ndim != 3 or p.shape[2] != 6:
            raise DimensionMismatch(f"expected (height, width, 6) parameters, got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise InvalidParams("local affine field contains non-finite values")
        p.flags.writeable = False
        object.__setattr__(self, "params", p)

    @classmethod
    def constant(cls, width: int, height: int, a=None) -> LocalAffineField:
        vec = IDENTITY6 if a is None else (a.vector() if isinstance(a, AffineParams) else np.asarray(a, float))
        return cls(np.broadcast_to(vec, (height, width, 6)).copy())

    @property
    def width(self) -> int:
        return self.params.shape[1]

    @property
    def height(self) -> int:
        return self.params.shape[0]


def params_to_field(field: LocalAffineField) -> DeformationField:
    """Displacement ``A(v) v - v`` induced by a per-pixel affine field."""
    p = field.params
    y, x = np.mgrid[0 : field.height, 0 : field.width].astype(float)
    ux = p[..., 0] * x + p[..., 1] * y + p[..., 2] - x
    uy = p[..., 3] * x + p[..., 4] * y + p[..., 5] - y
    return DeformationField(ux, uy)
