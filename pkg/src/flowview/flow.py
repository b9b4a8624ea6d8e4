"""Dense bidirectional optical flow via quadratic-penalty relaxation.

The solver is the classical brightness-constancy + smoothness iteration run
coarse-to-fine: at each pyramid level the second frame is warped back by the
current flow, the linearized residual is relaxed with Jacobi sweeps, and the
result seeds the next finer level. Jacobi (previous-iterate) neighbor
averages keep results bit-identical however the sweeps are scheduled.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .raster import (
    FlowField,
    GrayImage,
    Image,
    build_pyramid,
    sample_gray_grid,
    sample_image_grid,
    to_gray,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FlowParams:
    """Solver knobs; defaults pass the synthetic-shift acceptance tests."""

    alpha: float = 15.0
    iterations: int = 200
    levels: int = 4
    warp_updates: int = 3
    convergence_eps: float = 1e-3

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.iterations < 1 or self.levels < 1 or self.warp_updates < 1:
            raise ValueError("iterations, levels and warp_updates must be >= 1")
        if self.convergence_eps <= 0:
            raise ValueError("convergence_eps must be > 0")


def _require_same_dims(*items) -> None:
    dims = {(it.width, it.height) for it in items}
    if len(dims) != 1:
        raise DimensionMismatchError(f"mismatched dimensions: {sorted(dims)}")


def _neighbor_average(f: np.ndarray) -> np.ndarray:
    """4-neighbor mean with clamp-to-edge borders."""
    padded = np.pad(f, 1, mode="edge")
    return 0.25 * (
        padded[:-2, 1:-1] + padded[2:, 1:-1] + padded[1:-1, :-2] + padded[1:-1, 2:]
    )


def horn_schunck_level(
    a: GrayImage, b: GrayImage, init: FlowField, params: FlowParams
) -> FlowField:
    """One linearization-and-relax pass at a single resolution.

    ``b`` is warped back by ``init``, gradients are central differences
    averaged over the two frames, and the flow is relaxed by Jacobi sweeps of

        u <- u_avg - Ix (Ix u_avg + Iy v_avg + It) / (alpha^2 + Ix^2 + Iy^2)

    (symmetrically for v). The temporal residual is adjusted to the
    linearization point so the update solves for total flow, not an
    increment; smoothing therefore acts on the full field.
    """
    _require_same_dims(a, b, init)
    h, w = a.height, a.width
    u = init.vectors[:, :, 0].astype(np.float64)
    v = init.vectors[:, :, 1].astype(np.float64)

    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    wx, wy = xs + u, ys + v
    b_warped = sample_gray_grid(b, wx, wy)

    # The default alpha is calibrated for 0..255 luminance; GrayImage stores
    # [0, 1], so gradients are computed on the 8-bit scale.
    a_vals = a.values * 255.0
    b_vals = b_warped * 255.0
    ix = 0.5 * (np.gradient(a_vals, axis=1) + np.gradient(b_vals, axis=1))
    iy = 0.5 * (np.gradient(a_vals, axis=0) + np.gradient(b_vals, axis=0))
    it = b_vals - a_vals - ix * u - iy * v
    # Brightness constancy cannot hold where the warp leaves the frame
    # (clamped samples fabricate residuals); drop the data term there and let
    # smoothness extrapolate.
    inside = (wx >= 0) & (wx <= w - 1) & (wy >= 0) & (wy <= h - 1)
    ix = np.where(inside, ix, 0.0)
    iy = np.where(inside, iy, 0.0)
    it = np.where(inside, it, 0.0)
    denom = params.alpha ** 2 + ix ** 2 + iy ** 2

    final_delta = 0.0
    for _ in range(params.iterations):
        u_avg = _neighbor_average(u)
        v_avg = _neighbor_average(v)
        shared = (ix * u_avg + iy * v_avg + it) / denom
        u_new = u_avg - ix * shared
        v_new = v_avg - iy * shared
        final_delta = float(np.mean(np.hypot(u_new - u, v_new - v)))
        u, v = u_new, v_new
        if final_delta < params.convergence_eps:
            break
    if not np.isfinite(final_delta):
        raise FloatingPointError("relaxation diverged (non-finite update norm)")
    log.debug("horn_schunck_level %dx%d: final update norm %.3g", w, h, final_delta)
    return FlowField.from_array(np.stack([u, v], axis=-1))


def _upsample_flow(flow: FlowField, out_w: int, out_h: int) -> FlowField:
    """Bilinear upsample to the next finer grid; vectors scale by 2."""
    ys, xs = np.mgrid[0:out_h, 0:out_w].astype(np.float64)
    u = _resample(flow.vectors[:, :, 0].astype(np.float64), xs / 2.0, ys / 2.0)
    v = _resample(flow.vectors[:, :, 1].astype(np.float64), xs / 2.0, ys / 2.0)
    return FlowField.from_array(np.stack([2.0 * u, 2.0 * v], axis=-1))


def _resample(values: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    from .raster import _bilinear

    return _bilinear(values, xs, ys)


def pyramidal_flow(a: GrayImage, b: GrayImage, params: FlowParams) -> FlowField:
    """Coarse-to-fine flow from a to b, zero-initialized at the coarsest level."""
    _require_same_dims(a, b)
    pyr_a = build_pyramid(a, params.levels)
    pyr_b = build_pyramid(b, params.levels)
    flow = FlowField.zeros(pyr_a[-1].width, pyr_a[-1].height)
    for level in range(len(pyr_a) - 1, -1, -1):
        la, lb = pyr_a[level], pyr_b[level]
        if flow.width != la.width or flow.height != la.height:
            flow = _upsample_flow(flow, la.width, la.height)
        for _ in range(params.warp_updates):
            flow = horn_schunck_level(la, lb, flow, params)
    return flow


def bidirectional_flow(
    img1: Image, img2: Image, params: FlowParams | None = None
) -> tuple[FlowField, FlowField]:
    """Flows in both directions between the pair: (F12, F21)."""
    if params is None:
        params = FlowParams()
    _require_same_dims(img1, img2)
    g1, g2 = to_gray(img1), to_gray(img2)
    return pyramidal_flow(g1, g2, params), pyramidal_flow(g2, g1, params)


def warp_backward(image, flow: FlowField):
    """Inverse warp: output(p) = input(p + flow(p)), bilinear with clamp."""
    _require_same_dims(image, flow)
    h, w = flow.height, flow.width
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    sx = xs + flow.vectors[:, :, 0]
    sy = ys + flow.vectors[:, :, 1]
    if isinstance(image, GrayImage):
        return GrayImage(w, h, sample_gray_grid(image, sx, sy))
    if isinstance(image, Image):
        samples = sample_image_grid(image, sx, sy)
        return Image(w, h, np.floor(samples + 0.5).astype(np.uint8))
    raise TypeError(f"cannot warp {type(image).__name__}")


# ---------------------------------------------------------------------------
# diagnostic visualization (Middlebury color wheel)
# ---------------------------------------------------------------------------

def _make_colorwheel() -> np.ndarray:
    ry, yg, gc, cb, bm, mr = 15, 6, 4, 11, 13, 6
    wheel = np.zeros((ry + yg + gc + cb + bm + mr, 3))
    col = 0
    wheel[0:ry, 0] = 255
    wheel[0:ry, 1] = np.floor(255 * np.arange(ry) / ry)
    col += ry
    wheel[col:col + yg, 0] = 255 - np.floor(255 * np.arange(yg) / yg)
    wheel[col:col + yg, 1] = 255
    col += yg
    wheel[col:col + gc, 1] = 255
    wheel[col:col + gc, 2] = np.floor(255 * np.arange(gc) / gc)
    col += gc
    wheel[col:col + cb, 1] = 255 - np.floor(255 * np.arange(cb) / cb)
    wheel[col:col + cb, 2] = 255
    col += cb
    wheel[col:col + bm, 2] = 255
    wheel[col:col + bm, 0] = np.floor(255 * np.arange(bm) / bm)
    col += bm
    wheel[col:col + mr, 2] = 255 - np.floor(255 * np.arange(mr) / mr)
    wheel[col:col + mr, 0] = 255
    return wheel


def flow_to_color(flow: FlowField, max_magnitude: float | None = None) -> Image:
    """Standard flow color-coding: hue = direction, saturation = magnitude."""
    u = flow.vectors[:, :, 0].astype(np.float64)
    v = flow.vectors[:, :, 1].astype(np.float64)
    rad = np.hypot(u, v)
    if max_magnitude is None:
        max_magnitude = float(rad.max())
    scale = max(max_magnitude, 1e-9)
    u, v, rad = u / scale, v / scale, rad / scale

    wheel = _make_colorwheel()
    ncols = wheel.shape[0]
    angle = np.arctan2(-v, -u) / np.pi
    fk = (angle + 1.0) / 2.0 * (ncols - 1)
    k0 = np.floor(fk).astype(int)
    k1 = (k0 + 1) % ncols
    f = fk - k0

    rgb = np.zeros(flow.vectors.shape[:2] + (3,), dtype=np.uint8)
    for c in range(3):
        col0 = wheel[k0, c] / 255.0
        col1 = wheel[k1, c] / 255.0
        col = (1.0 - f) * col0 + f * col1
        col = np.where(rad <= 1.0, 1.0 - rad * (1.0 - col), col * 0.75)
        rgb[:, :, c] = np.floor(255.0 * col + 0.5).astype(np.uint8)
    return Image(flow.width, flow.height, rgb)
