"""Global affine registration by linearized least squares, coarse to fine.

One solve estimates ``A`` in ``source(v) ~ target(A v)`` from the normal
equations ``M a = b`` with ``M = sum(omega omega^T)`` and
``b = sum(omega (fx x + fy y + ft))`` where
``omega = (x fx, y fx, fx, x fy, y fy, fy)`` and ``ft = source - target``.
Iterations re-warp the original source and compose the inverse of each
incremental estimate into the running backward warp.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import standardization as stdz
from .config import LevelReport, RegistrationConfig, RegistrationReport
from .errors import DimensionMismatch, DomainTooSmall, IllConditioned, RegistrationError
from .image import GradientTriple, ImageGrid, Scale, gradient_triple, normalized_mse, warp_affine
from .pyramid import build_pyramid, clamp_depth, demote_affine, promote_affine
from .transforms import IDENTITY6, AffineParams

COND_FLOOR = 1e-10


def build_omega(fx, fy, x, y) -> np.ndarray:
    """``(x fx, y fx, fx, x fy, y fy, fy)``; broadcasts over array inputs (last axis = 6)."""
    fx, fy, x, y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (fx, fy, x, y)))
    return np.stack([x * fx, y * fx, fx, x * fy, y * fy, fy], axis=-1)


@dataclass(frozen=True, eq=False)
class NormalEquations:
    M: np.ndarray
    b: np.ndarray


def accumulate_normal_equations(grads: GradientTriple, domain=None) -> NormalEquations:
    """Sum the per-pixel systems over ``domain = (x0, y0, x1, y1)`` (end-exclusive).

    ``None`` means the whole image.
    """
    h, w = grads.shape
    x0, y0, x1, y1 = (0, 0, w, h) if domain is None else domain
    if not (0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h):
        raise DomainTooSmall(f"domain {domain} is empty or outside the {w}x{h} image")
    if (x1 - x0) * (y1 - y0) < 6:
        raise DomainTooSmall(f"domain {domain} has fewer than 6 pixels")
    y, x = np.mgrid[y0:y1, x0:x1].astype(float)
    fx = grads.fx[y0:y1, x0:x1]
    fy = grads.fy[y0:y1, x0:x1]
    ft = grads.ft[y0:y1, x0:x1]
    omega = build_omega(fx, fy, x, y).reshape(-1, 6)
    rhs = (fx * x + fy * y + ft).ravel()
    M = omega.T @ omega
    return NormalEquations(0.5 * (M + M.T), omega.T @ rhs)


def check_conditioning(M: np.ndarray) -> None:
    eig = np.linalg.eigvalsh(M)
    if eig[-1] <= 0 or eig[0] < COND_FLOOR * eig[-1]:
        raise IllConditioned(
            f"normal matrix is degenerate (eigenvalues {eig[0]:.3g} .. {eig[-1]:.3g}); "
            "textureless or collinear data"
        )


def solve_affine(ne: NormalEquations) -> AffineParams:
    check_conditioning(ne.M)
    # symmetric diagonal scaling keeps the solve accurate despite the x^2 / 1 spread
    d = 1.0 / np.sqrt(np.diag(ne.M))
    a = d * np.linalg.solve(ne.M * np.outer(d, d), d * ne.b)
    return AffineParams.from_vector(a)


class IntensityArm:
    """Intensity handling shared by the global and elastic pipelines.

    With a trained standard scale both images are standardized up front
    and, when enabled, every pyramid level and every warped source is
    re-standardized from its own histogram. Without one, intensities stay
    on the image scale and MSE is normalized by the larger image maximum.
    """

    def __init__(self, std: stdz.StandardScaleConfig | None, restandardize: bool):
        self.std = std
        self.restandardize = restandardize and std is not None
        self.restandardizations = 0
        self.level_restandardizations = 0
        self.warps = 0

    @property
    def label(self) -> str:
        return "standard" if self.std is not None else "image"

    def prepare(self, source: ImageGrid, target: ImageGrid) -> tuple[ImageGrid, ImageGrid, float]:
        if source.shape != target.shape:
            raise DimensionMismatch(f"source {source.width}x{source.height} vs target {target.width}x{target.height}")
        if self.std is None:
            top = max(float(source.data.max()), float(target.data.max()))
            return source, target, top if top > 0 else 1.0
        return stdz.standardize_image(source, self.std), stdz.standardize_image(target, self.std), self.std.s2

    def pyramid(self, img: ImageGrid, depth: int) -> list[ImageGrid]:
        levels = list(build_pyramid(img, depth))
        if self.restandardize:
            levels[:-1] = [self._restandardize(lv) for lv in levels[:-1]]
            self.level_restandardizations += len(levels) - 1
        return levels

    def after_warp(self, warped: ImageGrid) -> ImageGrid:
        self.warps += 1
        if self.restandardize:
            self.restandardizations += 1
            return self._restandardize(warped)
        if self.std is not None:
            return warped.with_data(np.clip(warped.data, self.std.s1, self.std.s2), Scale.STANDARD)
        return warped

    def _restandardize(self, img: ImageGrid) -> ImageGrid:
        return stdz.standardize_image(img.with_data(img.data, Scale.IMAGE), self.std)


class GlobalResult(NamedTuple):
    transform: object
    registered: ImageGrid
    report: RegistrationReport


def _change(B: AffineParams) -> float:
    return float(np.max(np.abs(B.vector() - IDENTITY6)))


def register_global(
    source: ImageGrid,
    target: ImageGrid,
    cfg: RegistrationConfig | None = None,
    std: stdz.StandardScaleConfig | None = None,
    initial=None,
) -> GlobalResult:
    """Coarse-to-fine global affine registration.

    Returns the backward warp ``T`` (``registered(v) = source(T v)``) at full
    resolution, the registered source and a report. An iteration that
    raises the MSE is rejected and ends its level.
    """
    cfg = cfg or RegistrationConfig()
    arm = IntensityArm(std, cfg.standardize_each_warp)
    src, tgt, top = arm.prepare(source, target)
    depth = clamp_depth(src.width, src.height, cfg.depth)
    src_levels = arm.pyramid(src, depth)
    tgt_levels = arm.pyramid(tgt, depth)

    report = RegistrationReport(mode="affine", scale=arm.label)
    report.initial_mse = normalized_mse(src, tgt, top)
    T = AffineParams.identity() if initial is None else demote_affine(initial, depth - 1)

    warped = None
    for k in range(depth):
        if k > 0:
            T = promote_affine(T)
        S, G = src_levels[k], tgt_levels[k]
        warped = arm.after_warp(warp_affine(S, T, cfg.interp))
        cur = normalized_mse(warped, G, top)
        level = LevelReport(k, S.width, S.height, 0, float("nan"), cur, cur)
        for it in range(cfg.iters_per_level):
            try:
                B = solve_affine(accumulate_normal_equations(gradient_triple(warped, G, top)))
                T_new = T @ B.inverse()
                cand = arm.after_warp(warp_affine(S, T_new, cfg.interp))
            except RegistrationError as exc:
                raise type(exc)(f"level {k} ({S.width}x{S.height}), iteration {it}: {exc}") from None
            new = normalized_mse(cand, G, top)
            level.iterations = it + 1
            if new > cur:
                level.rejected += 1
                break
            T, warped, cur = T_new, cand, new
            level.param_change = _change(B)
            if level.param_change < cfg.convergence_eps:
                break
        level.mse_after = cur
        report.per_level.append(level)

    report.final_mse = report.per_level[-1].mse_after
    report.final_transform = T
    report.warps = arm.warps
    report.restandardizations = arm.restandardizations
    return GlobalResult(T, warped, report)
