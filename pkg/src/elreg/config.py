"""Registration configuration and per-run diagnostics."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .image import InterpMethod
from .transforms import AffineParams, DeformationField


@dataclass(frozen=True)
class RegistrationConfig:
    depth: int = 4
    iters_per_level: int = 10
    interp: InterpMethod = InterpMethod.CUBIC
    # smoothness weights for the local model, on [0, 1]-normalized intensities
    lambdas: tuple[float, ...] = (0.1,) * 6
    neighborhood: int = 5
    elastic_sweeps: int = 20
    elastic_passes: int = 3
    smoothing_stencil: str = "window"
    standardize_each_warp: bool = True
    convergence_eps: float = 1e-4

    def __post_init__(self):
        object.__setattr__(self, "interp", InterpMethod.parse(self.interp))
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if self.iters_per_level < 1 or self.elastic_sweeps < 1 or self.elastic_passes < 1:
            raise ValueError("iteration counts must be at least 1")
        if self.neighborhood < 3 or self.neighborhood % 2 == 0:
            raise ValueError("neighborhood must be an odd size >= 3")
        if len(self.lambdas) != 6 or min(self.lambdas) < 0:
            raise ValueError("lambdas must be six non-negative weights")
        if self.smoothing_stencil not in ("window", "laplacian"):
            raise ValueError("smoothing_stencil must be 'window' or 'laplacian'")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["interp"] = self.interp.value
        d["lambdas"] = list(self.lambdas)
        return d


@dataclass
class LevelReport:
    level: int
    width: int
    height: int
    iterations: int
    param_change: float
    mse_before: float
    mse_after: float
    rejected: int = 0


@dataclass
class RegistrationReport:
    mode: str
    scale: str
    per_level: list[LevelReport] = field(default_factory=list)
    final_mse: float = float("nan")
    initial_mse: float = float("nan")
    warps: int = 0
    restandardizations: int = 0
    final_transform: AffineParams | DeformationField | None = None
    global_report: RegistrationReport | None = None

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "scale": self.scale,
            "initial_mse": self.initial_mse,
            "final_mse": self.final_mse,
            "warps": self.warps,
            "restandardizations": self.restandardizations,
            "per_level": [asdict(lv) for lv in self.per_level],
        }
        if isinstance(self.final_transform, AffineParams):
            out["transform"] = self.final_transform.vector().tolist()
        elif isinstance(self.final_transform, DeformationField):
            out["field_rms"] = self.final_transform.rms()
            out["field_max"] = float(np.max(self.final_transform.magnitude()))
        if self.global_report is not None:
            out["global"] = self.global_report.to_dict()
        return out
