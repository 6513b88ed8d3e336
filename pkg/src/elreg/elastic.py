"""Locally affine, globally smooth elastic registration.

Every pixel carries its own affine model, estimated from the linearized
brightness error over a small window ``D`` around it and pulled towards
the mean of the neighbouring models by the diagonal weights ``Lambda``:

    a_new = (sum_D omega omega^T + Lambda)^-1 (sum_D omega f^T v + Lambda a_mean)

Parameters are stored in absolute pixel coordinates but every per-pixel
system is solved in coordinates centred on that pixel (same affine map,
far better conditioned); there the translation entries are the displacement
at the pixel itself. Smoothing acts on these centred parameter planes.

The neighbour mean is a symmetric averaging operator ``W``: a neighbour that
falls outside the image counts as the centre pixel. Sweeps update all pixels
at once (Jacobi), which is then exactly a splitting of the quadratic

    E(a) = sum_p window_error_p(a_p) + sum_i lambda_i a_i^T (I - W) a_i

and, because ``I + W`` is positive definite, never increases ``E``.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import ndimage

from . import standardization as stdz
from .config import LevelReport, RegistrationConfig, RegistrationReport
from .errors import DimensionMismatch, IllConditioned, RegistrationError
from .global_affine import COND_FLOOR, IntensityArm, accumulate_normal_equations, register_global
from .image import GradientTriple, ImageGrid, InterpMethod, gradient_triple, normalized_mse, sample, warp_field
from .pyramid import clamp_depth, demote_affine, promote_field
from .transforms import DeformationField, LocalAffineField, params_to_field

LAPLACIAN_STENCIL = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]) / 4.0


def smoothness_energy(field: LocalAffineField, lambdas) -> float:
    lam = np.asarray(lambdas, dtype=float)
    p = field.params
    dx = np.diff(p, axis=1)
    dy = np.diff(p, axis=0)
    per_param = np.sum(dx * dx, axis=(0, 1)) + np.sum(dy * dy, axis=(0, 1))
    return float(per_param @ lam)


def data_energy(grads: GradientTriple, field: LocalAffineField) -> float:
    """Linearized brightness error ``sum (omega^T a(v) - f^T v)^2`` of a field."""
    u = params_to_field(field)
    r = grads.fx * u.ux + grads.fy * u.uy - grads.ft
    return float(np.sum(r * r))


def total_energy(grads: GradientTriple, field: LocalAffineField, lambdas, neighborhood: int = 5,
                 systems: WindowSystems | None = None, stencil: str = "window") -> float:
    """Objective descended by ``sweep``: windowed linearized error plus
    ``sum_i lambda_i a_i^T (I - W) a_i`` over the centred parameter planes."""
    if systems is None:
        systems = window_systems(grads, neighborhood)
    h, w = grads.shape
    cy, cx = np.mgrid[0:h, 0:w].astype(float)
    a = to_centered(field.params, cx, cy)
    quad = np.einsum("...i,...ij,...j->...", a, systems.M, a) - 2.0 * np.einsum("...i,...i->...", systems.b, a)
    rough = np.sum(a * (a - neighbour_mean(a, neighborhood, stencil)), axis=(0, 1))
    return float(np.sum(quad + systems.c) + rough @ np.asarray(lambdas, dtype=float))


def _stencil(neighborhood: int, stencil: str) -> np.ndarray:
    if stencil == "laplacian":
        return LAPLACIAN_STENCIL
    return np.full((neighborhood, neighborhood), 1.0 / neighborhood**2)


def neighbour_mean(params: np.ndarray, neighborhood: int | None, stencil: str = "window") -> np.ndarray:
    """Component-wise weighted average of the parameter planes.

    Out-of-image neighbours take the centre pixel's value, which keeps the
    operator symmetric. ``neighborhood=None`` averages over the whole image.
    """
    if neighborhood is None:
        return np.broadcast_to(params.reshape(-1, 6).mean(axis=0), params.shape).copy()
    kernel = _stencil(neighborhood, stencil)
    inside = ndimage.correlate(np.ones(params.shape[:2]), kernel, mode="constant", cval=0.0)
    missing = kernel.sum() - inside
    out = np.empty_like(params)
    for i in range(6):
        out[..., i] = ndimage.correlate(params[..., i], kernel, mode="constant", cval=0.0) + missing * params[..., i]
    return out


def to_centered(params: np.ndarray, cx, cy) -> np.ndarray:
    """Rewrite absolute-frame parameters in the frame centred at ``(cx, cy)``."""
    out = np.array(params, dtype=float, copy=True)
    out[..., 2] = params[..., 2] + params[..., 0] * cx + params[..., 1] * cy - cx
    out[..., 5] = params[..., 5] + params[..., 3] * cx + params[..., 4] * cy - cy
    return out


def to_absolute(params: np.ndarray, cx, cy) -> np.ndarray:
    out = np.array(params, dtype=float, copy=True)
    out[..., 2] = params[..., 2] - params[..., 0] * cx - params[..., 1] * cy + cx
    out[..., 5] = params[..., 5] - params[..., 3] * cx - params[..., 4] * cy + cy
    return out


class WindowSystems(NamedTuple):
    """Per-pixel normal equations in centred coordinates.

    ``M`` (h, w, 6, 6), ``b`` (h, w, 6) and ``c`` (h, w), the window sum of
    squared right-hand sides, so that the window error is ``a.M.a - 2 b.a + c``.
    """

    M: np.ndarray
    b: np.ndarray
    c: np.ndarray


def window_systems(grads: GradientTriple, neighborhood: int) -> WindowSystems:
    """Sum ``omega omega^T`` and ``omega f^T v`` over the window at every pixel.

    With offsets ``d`` from the window centre, ``omega = (fx q, fy q)`` for
    ``q = (dx, dy, 1)`` and ``f^T v = fx dx + fy dy + ft``. Window sums of
    ``monomial(d) * g`` are correlations with small monomial kernels; pixels
    outside the image contribute nothing.
    """
    r = neighborhood // 2
    dy, dx = np.mgrid[-r : r + 1, -r : r + 1].astype(float)
    ones = np.ones_like(dx)
    q = (dx, dy, ones)
    fx, fy, ft = grads.fx, grads.fy, grads.ft
    products = {"xx": fx * fx, "xy": fx * fy, "yy": fy * fy, "xt": fx * ft, "yt": fy * ft, "tt": ft * ft}
    cache: dict = {}

    def wsum(kernel, g_key):
        key = (kernel.tobytes(), g_key)
        if key not in cache:
            cache[key] = ndimage.correlate(products[g_key], kernel, mode="constant", cval=0.0)
        return cache[key]

    h, w = fx.shape
    M = np.empty((h, w, 6, 6))
    b = np.empty((h, w, 6))
    blocks = (("xx", 0, 0), ("xy", 0, 3), ("xy", 3, 0), ("yy", 3, 3))
    for g_key, r0, c0 in blocks:
        for i in range(3):
            for j in range(3):
                M[..., r0 + i, c0 + j] = wsum(q[i] * q[j], g_key)
    # b = sum(fx q r) and sum(fy q r) with r = fx dx + fy dy + ft
    for r0, (g_dx, g_dy, g_t) in ((0, ("xx", "xy", "xt")), (3, ("xy", "yy", "yt"))):
        for i in range(3):
            b[..., r0 + i] = (
                wsum(q[i] * dx, g_dx) + wsum(q[i] * dy, g_dy) + wsum(q[i], g_t)
            )
    c = (
        wsum(dx * dx, "xx") + 2.0 * wsum(dx * dy, "xy") + wsum(dy * dy, "yy")
        + 2.0 * wsum(dx, "xt") + 2.0 * wsum(dy, "yt") + wsum(ones, "tt")
    )
    return WindowSystems(M, b, c)


def _check_batch_conditioning(M: np.ndarray) -> None:
    eig = np.linalg.eigvalsh(M)
    bad = (eig[..., -1] <= 0) | (eig[..., 0] < COND_FLOOR * eig[..., -1])
    if np.any(bad):
        iy, ix = np.argwhere(bad)[0]
        raise IllConditioned(f"{int(bad.sum())} window systems singular without smoothing (first at x={ix}, y={iy})")


def _solve_systems(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    d = 1.0 / np.sqrt(np.maximum(np.diagonal(M, axis1=-2, axis2=-1), 1e-300))
    scaled = M * d[..., :, None] * d[..., None, :]
    return d * np.linalg.solve(scaled, (d * rhs)[..., None])[..., 0]


def local_update(
    grads: GradientTriple,
    field: LocalAffineField,
    lambdas,
    v: tuple[int, int],
    neighborhood: int = 5,
    stencil: str = "window",
) -> np.ndarray:
    """Regularized estimate at the single pixel ``v = (x, y)``.

    Written directly from the per-pixel sums, independent of the vectorized
    ``sweep``.
    """
    lam = np.asarray(lambdas, dtype=float)
    h, w = grads.shape
    cx, cy = v
    r = neighborhood // 2
    x0, x1 = max(cx - r, 0), min(cx + r + 1, w)
    y0, y1 = max(cy - r, 0), min(cy + r + 1, h)
    # neighbours' parameters, each in its own centred frame
    if stencil == "laplacian":
        offsets = [(0, 1), (0, -1), (1, 0), (-1, 0)]
    else:
        offsets = [(dx, dy) for dy in range(-r, r + 1) for dx in range(-r, r + 1)]
    vals = []
    for dx, dy in offsets:
        qx, qy = cx + dx, cy + dy
        if not (0 <= qx < w and 0 <= qy < h):
            qx, qy = cx, cy
        vals.append(to_centered(field.params[qy, qx], qx, qy))
    a_mean_c = np.mean(vals, axis=0)
    M = np.zeros((6, 6))
    b = np.zeros(6)
    for yy in range(y0, y1):
        for xx in range(x0, x1):
            fx, fy, ft = grads.fx[yy, xx], grads.fy[yy, xx], grads.ft[yy, xx]
            ddx, ddy = xx - cx, yy - cy
            om = np.array([ddx * fx, ddy * fx, fx, ddx * fy, ddy * fy, fy])
            M += np.outer(om, om)
            b += om * (fx * ddx + fy * ddy + ft)
    if not M.any() and np.all(lam > 0):
        # no data in the window: the update is the neighbour mean itself
        return to_absolute(a_mean_c, cx, cy)
    if not np.any(lam > 0):
        eig = np.linalg.eigvalsh(M)
        if eig[-1] <= 0 or eig[0] < COND_FLOOR * eig[-1]:
            raise IllConditioned(f"window at {v} is degenerate and unregularized")
    a_c = _solve_systems(M + np.diag(lam), b + lam * a_mean_c)
    return to_absolute(a_c, cx, cy)


def sweep(
    grads: GradientTriple,
    field: LocalAffineField,
    lambdas,
    neighborhood: int | None = 5,
    stencil: str = "window",
    systems: WindowSystems | None = None,
) -> LocalAffineField:
    """One simultaneous update of every pixel from the previous field.

    ``neighborhood=None`` takes ``D`` (and the averaging domain) to be the
    whole image. ``systems`` may carry precomputed window sums for ``grads``.
    """
    lam = np.asarray(lambdas, dtype=float)
    if field.params.shape[:2] != grads.shape:
        raise DimensionMismatch(f"field {field.params.shape[:2]} vs gradients {grads.shape}")
    h, w = grads.shape
    if neighborhood is None:
        a_mean = neighbour_mean(field.params, None)
        ne = accumulate_normal_equations(grads)
        if not np.any(lam > 0):
            _check_batch_conditioning(ne.M[None])
        a = _solve_systems(ne.M + np.diag(lam), ne.b + lam * a_mean[0, 0])
        return LocalAffineField(np.broadcast_to(a, (h, w, 6)).copy())
    if systems is None:
        systems = window_systems(grads, neighborhood)
    if not np.any(lam > 0):
        _check_batch_conditioning(systems.M)
    cy, cx = np.mgrid[0:h, 0:w].astype(float)
    a_mean_c = neighbour_mean(to_centered(field.params, cx, cy), neighborhood, stencil)
    a_c = _solve_systems(systems.M + np.diag(lam), systems.b + lam * a_mean_c)
    empty = ~systems.M.any(axis=(-2, -1))
    if np.all(lam > 0) and empty.any():
        a_c[empty] = a_mean_c[empty]
    return LocalAffineField(to_absolute(a_c, cx, cy))


def sample_field(field: DeformationField, xs, ys) -> DeformationField:
    return DeformationField(
        sample(field.ux, xs, ys, InterpMethod.BILINEAR), sample(field.uy, xs, ys, InterpMethod.BILINEAR)
    )


def compose_fields(u_new: DeformationField, u_acc: DeformationField) -> DeformationField:
    """Field of ``v -> w + u_acc(w)`` with ``w = v + u_new(v)`` (backward warps)."""
    if u_new.shape != u_acc.shape:
        raise DimensionMismatch(f"fields differ in size: {u_new.shape} vs {u_acc.shape}")
    y, x = np.mgrid[0 : u_new.height, 0 : u_new.width].astype(float)
    return u_new + sample_field(u_acc, x + u_new.ux, y + u_new.uy)


def invert_field(u: DeformationField, iterations: int = 8) -> DeformationField:
    """Fixed-point inverse ``e(w) = -u(w + e(w))``."""
    y, x = np.mgrid[0 : u.height, 0 : u.width].astype(float)
    e = u.scaled(-1.0)
    for _ in range(iterations):
        e = sample_field(u, x + e.ux, y + e.uy).scaled(-1.0)
    return e


class ElasticResult(NamedTuple):
    field: DeformationField
    registered: ImageGrid
    report: RegistrationReport


def estimate_local_field(grads: GradientTriple, cfg: RegistrationConfig, sweeps: int | None = None) -> LocalAffineField:
    """Run the smoothness-coupled sweeps from the identity field."""
    h, w = grads.shape
    systems = window_systems(grads, cfg.neighborhood)
    field = LocalAffineField.constant(w, h)
    for _ in range(cfg.elastic_sweeps if sweeps is None else sweeps):
        field = sweep(grads, field, cfg.lambdas, cfg.neighborhood, cfg.smoothing_stencil, systems)
    return field


def register_elastic(
    source: ImageGrid,
    target: ImageGrid,
    cfg: RegistrationConfig | None = None,
    std: stdz.StandardScaleConfig | None = None,
) -> ElasticResult:
    """Global affine pre-alignment followed by coarse-to-fine local refinement.

    Returns the accumulated backward displacement field at full resolution
    (``registered(v) = source(v + u(v))``), the registered source and a report
    whose ``global_report`` describes the pre-alignment.
    """
    cfg = cfg or RegistrationConfig()
    pre = register_global(source, target, cfg, std)
    arm = IntensityArm(std, cfg.standardize_each_warp)
    src, tgt, top = arm.prepare(source, target)
    depth = clamp_depth(src.width, src.height, cfg.depth)
    src_levels = arm.pyramid(src, depth)
    tgt_levels = arm.pyramid(tgt, depth)

    report = RegistrationReport(mode="elastic", scale=arm.label, global_report=pre.report)
    report.initial_mse = pre.report.initial_mse
    U = demote_affine(pre.transform, depth - 1).displacement(src_levels[0].width, src_levels[0].height)
    warped = None
    for k in range(depth):
        S, G = src_levels[k], tgt_levels[k]
        if k > 0:
            U = promote_field(U, S.width, S.height)
        warped = arm.after_warp(warp_field(S, U, cfg.interp))
        cur = normalized_mse(warped, G, top)
        level = LevelReport(k, S.width, S.height, 0, float("nan"), cur, cur)
        for it in range(cfg.elastic_passes):
            try:
                grads = gradient_triple(warped, G, top)
                local = estimate_local_field(grads, cfg)
            except RegistrationError as exc:
                raise type(exc)(f"level {k} ({S.width}x{S.height}), pass {it}: {exc}") from None
            step = invert_field(params_to_field(local))
            U_new = compose_fields(step, U)
            cand = arm.after_warp(warp_field(S, U_new, cfg.interp))
            new = normalized_mse(cand, G, top)
            level.iterations = it + 1
            if new > cur:
                level.rejected += 1
                break
            U, warped, cur = U_new, cand, new
            level.param_change = float(np.max(step.magnitude()))
            if level.param_change < cfg.convergence_eps:
                break
        level.mse_after = cur
        report.per_level.append(level)

    report.final_mse = report.per_level[-1].mse_after
    report.final_transform = U
    report.warps = pre.report.warps + arm.warps
    report.restandardizations = pre.report.restandardizations + arm.restandardizations
    return ElasticResult(U, warped, report)
