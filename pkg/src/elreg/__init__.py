"""2D elastic image registration on a standardized intensity scale."""
from .config import RegistrationConfig, RegistrationReport
from .elastic import register_elastic
from .global_affine import register_global, solve_affine
from .image import ImageGrid, InterpMethod, Scale
from .standardization import StandardScaleConfig, standardize_image, train
from .transforms import AffineParams, DeformationField, LocalAffineField

__all__ = [
    "AffineParams",
    "DeformationField",
    "ImageGrid",
    "InterpMethod",
    "LocalAffineField",
    "RegistrationConfig",
    "RegistrationReport",
    "Scale",
    "StandardScaleConfig",
    "register_elastic",
    "register_global",
    "solve_affine",
    "standardize_image",
    "train",
]
