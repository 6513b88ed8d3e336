"""Registration quality: batch MSE statistics and checkerboard composites."""
from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import RegistrationConfig
from .elastic import register_elastic
from .errors import DimensionMismatch, ElregError
from .global_affine import register_global
from .image import ImageGrid
from .standardization import StandardScaleConfig
from .transforms import AffineParams, DeformationField


class Mode(enum.Enum):
    AFFINE = "affine"
    ELASTIC = "elastic"


def checkerboard(a: ImageGrid, b: ImageGrid, square: int | None = None) -> ImageGrid:
    """Alternate ``square``-sized blocks of ``a`` (even parity) and ``b``."""
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.width}x{a.height} vs {b.width}x{b.height}")
    if square is None:
        square = max(1, round(a.width / 8))
    if square < 1:
        raise ValueError("square must be at least 1 pixel")
    y, x = np.mgrid[0 : a.height, 0 : a.width]
    even = ((x // square + y // square) % 2) == 0
    return a.with_data(np.where(even, a.data, b.data))


def displacement_error(est: DeformationField, truth: DeformationField) -> float:
    """Root-mean-square length of ``est - truth`` in pixels."""
    if est.shape != truth.shape:
        raise DimensionMismatch(f"fields differ in size: {est.shape} vs {truth.shape}")
    return (est - truth).rms()


def as_field(transform, width: int, height: int) -> DeformationField:
    if isinstance(transform, AffineParams):
        return transform.displacement(width, height)
    return transform


@dataclass
class EvalPair:
    id: str
    source: ImageGrid
    target: ImageGrid
    truth: AffineParams | DeformationField | None = None


@dataclass
class PairResult:
    id: str
    mse: float | None
    disp_rms: float | None = None
    initial_mse: float | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class BatchReport:
    mode: str
    scale: str
    pairs: list[PairResult] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.pairs)

    def _mses(self) -> np.ndarray:
        return np.array([p.mse for p in self.pairs if p.ok], dtype=float)

    @property
    def mse_mean(self) -> float:
        m = self._mses()
        return float(m.mean()) if m.size else math.nan

    @property
    def mse_max(self) -> float:
        m = self._mses()
        return float(m.max()) if m.size else math.nan

    @property
    def mse_min(self) -> float:
        m = self._mses()
        return float(m.min()) if m.size else math.nan

    @property
    def failures(self) -> int:
        return sum(not p.ok for p in self.pairs)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mode": self.mode,
            "scale": self.scale,
            "mse_mean": self.mse_mean,
            "mse_max": self.mse_max,
            "mse_min": self.mse_min,
            "pairs": [asdict(p) for p in self.pairs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def format_table(reports: dict[str, BatchReport]) -> str:
    """Aligned ``label | MSE | Max MSE | Min MSE`` table."""
    rows = [("Scale/Error", "MSE", "Max MSE", "Min MSE")]
    for label, rep in reports.items():
        rows.append((label, f"{rep.mse_mean:.4g}", f"{rep.mse_max:.4g}", f"{rep.mse_min:.4g}"))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = [" | ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
    lines.insert(1, "-+-".join("-" * w for w in widths))
    return "\n".join(lines)


def evaluate_pair(pair: EvalPair, mode: Mode, cfg: RegistrationConfig, std: StandardScaleConfig | None) -> PairResult:
    try:
        if mode is Mode.AFFINE:
            transform, _, report = register_global(pair.source, pair.target, cfg, std)
        else:
            transform, _, report = register_elastic(pair.source, pair.target, cfg, std)
    except (ElregError, np.linalg.LinAlgError) as exc:
        return PairResult(pair.id, None, error=f"{type(exc).__name__}: {exc}")
    disp = None
    if pair.truth is not None:
        w, h = pair.source.width, pair.source.height
        disp = displacement_error(as_field(transform, w, h), as_field(pair.truth, w, h))
    return PairResult(pair.id, report.final_mse, disp, report.initial_mse)


def _evaluate_star(args):
    return evaluate_pair(*args)


def batch_evaluate(
    pairs,
    mode=Mode.AFFINE,
    cfg: RegistrationConfig | None = None,
    std: StandardScaleConfig | None = None,
    jobs: int = 1,
) -> BatchReport:
    """Register every pair and aggregate; results keep the input order."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("batch is empty")
    mode = Mode(mode)
    cfg = cfg or RegistrationConfig()
    work = [(p, mode, cfg, std) for p in pairs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_evaluate_star, work))
    else:
        results = [_evaluate_star(w) for w in work]
    return BatchReport(mode.value, "standard" if std is not None else "image", results)
