"""Parallax-correct magnification driven by the flow-magnitude depth proxy.

The warped view splits into a foreground layer (large flow magnitude, i.e.
near) and a background layer; the foreground scales by the requested zoom
while the background scales by the flow-ratio-derived factor
``1 + (Z - 1) * f_bg / f_fg``, so equal-depth scenes degenerate to a uniform
zoom and static content stays put. The background layer is the whole view,
so growing the foreground only ever occludes more; it never opens holes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateFieldError, DimensionMismatchError, InvalidParameterError
from .raster import FlowField, Image, ScalarField, sample_image_grid
from .synthesis import (
    ViewResult,
    forward_warp,
    fuse_views,
    scale_flow,
    synthesize_view,
)

CLOSING_SIZE = 5
OTSU_BINS = 64


@dataclass(frozen=True)
class LayerMask:
    """Per-pixel foreground flag, hole-free by construction."""

    width: int
    height: int
    bits: np.ndarray

    def __post_init__(self):
        if self.bits.shape != (self.height, self.width):
            raise ValueError("mask shape does not match dimensions")
        if self.bits.dtype != np.bool_:
            raise ValueError("mask must be boolean")


@dataclass(frozen=True)
class CloseupParams:
    """Zoom factor, zoom center (unit fractions) and segmentation knobs."""

    zoom: float = 1.0
    center: tuple[float, float] = (0.5, 0.5)
    tau: float | str = "auto"
    feather: float = 2.0

    def __post_init__(self):
        if self.zoom < 1.0:
            raise InvalidParameterError(f"zoom must be >= 1, got {self.zoom}")
        cx, cy = self.center
        if not (0.0 <= cx <= 1.0 and 0.0 <= cy <= 1.0):
            raise InvalidParameterError(f"center must lie in the unit square, got {self.center}")
        if self.tau != "auto":
            if not isinstance(self.tau, (int, float)) or self.tau < 0:
                raise InvalidParameterError(f"tau must be >= 0 or 'auto', got {self.tau!r}")
        if self.feather < 0:
            raise InvalidParameterError("feather must be >= 0")


def segment_foreground(magnitude: ScalarField, tau: float) -> LayerMask:
    """Threshold the magnitude field and close it into a solid foreground.

    After thresholding (magnitude >= tau) the mask is morphologically closed
    with a 5x5 square, then any background region not reaching the image
    border is filled in: relatively static pixels inside a moving target can
    measure zero flow, and the enclosed area belongs to the target.
    """
    if tau < 0:
        raise InvalidParameterError("tau must be >= 0")
    bits = magnitude.values >= tau
    structure = np.ones((CLOSING_SIZE, CLOSING_SIZE), dtype=bool)
    # Dilate with background outside the frame, erode with foreground outside:
    # closing must not eat mask regions that touch the border.
    closed = ndimage.binary_erosion(
        ndimage.binary_dilation(bits, structure=structure, border_value=0),
        structure=structure,
        border_value=1,
    )
    filled = ndimage.binary_fill_holes(closed)
    return LayerMask(magnitude.width, magnitude.height, filled)


def auto_tau(magnitude: ScalarField) -> float:
    """Otsu's threshold over a 64-bin histogram of the magnitudes.

    Raises:
        DegenerateFieldError: the field is constant.
    """
    vals = magnitude.values.ravel()
    lo, hi = float(vals.min()), float(vals.max())
    if hi <= lo:
        raise DegenerateFieldError("magnitude field is constant; no threshold exists")
    hist, edges = np.histogram(vals, bins=OTSU_BINS, range=(lo, hi))
    p = hist / hist.sum()
    centers = 0.5 * (edges[:-1] + edges[1:])
    omega = np.cumsum(p)
    mu = np.cumsum(p * centers)
    mu_total = mu[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma_b = (mu_total * omega - mu) ** 2 / (omega * (1.0 - omega))
    sigma_b = np.nan_to_num(sigma_b[:-1], nan=-np.inf)
    k = int(np.argmax(sigma_b))
    return float(edges[k + 1])


def _zoom_coords(w: int, h: int, center: tuple[float, float], z: float):
    cx = center[0] * (w - 1)
    cy = center[1] * (h - 1)
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    return cx + (xs - cx) / z, cy + (ys - cy) / z


def uniform_zoom(image: Image, z: float, center: tuple[float, float]) -> Image:
    """Plain bilinear magnification about the center (the close-up fallback)."""
    if z < 1.0:
        raise InvalidParameterError("zoom must be >= 1")
    if z == 1.0:
        return Image(image.width, image.height, image.pixels.copy())
    sx, sy = _zoom_coords(image.width, image.height, center, z)
    samples = sample_image_grid(image, sx, sy)
    return Image(image.width, image.height, np.floor(samples + 0.5).astype(np.uint8))


def _sample_binary(field: np.ndarray, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
    from .raster import _bilinear

    return _bilinear(field.astype(np.float64), sx, sy) >= 0.5


def _layered_zoom_masked(
    view: Image,
    valid: np.ndarray,
    mask: LayerMask,
    f_fg: float,
    f_bg: float,
    params: CloseupParams,
) -> tuple[Image, np.ndarray]:
    from .raster import _bilinear

    z = params.zoom
    if f_fg <= 0:
        raise InvalidParameterError("f_fg must be > 0")
    if not f_fg >= f_bg >= 0:
        raise InvalidParameterError("need f_fg >= f_bg >= 0")
    if z == 1.0:
        return Image(view.width, view.height, view.pixels.copy()), valid.copy()
    z_bg = 1.0 + (z - 1.0) * (f_bg / f_fg)

    bx, by = _zoom_coords(view.width, view.height, params.center, z_bg)
    bg = sample_image_grid(view, bx, by)
    bg_valid = _sample_binary(valid, bx, by)

    fx, fy = _zoom_coords(view.width, view.height, params.center, z)
    fg = sample_image_grid(view, fx, fy)
    fg_valid = _sample_binary(valid, fx, fy)
    scaled_mask = _bilinear(mask.bits.astype(np.float64), fx, fy) >= 0.5

    if params.feather > 0 and scaled_mask.any() and not scaled_mask.all():
        dist = ndimage.distance_transform_edt(scaled_mask)
        alpha = np.clip(dist / params.feather, 0.0, 1.0)
    else:
        alpha = scaled_mask.astype(np.float64)

    out = alpha[:, :, None] * fg + (1.0 - alpha[:, :, None]) * bg
    out_valid = np.where(alpha >= 0.5, fg_valid, bg_valid)
    return Image(view.width, view.height, np.floor(out + 0.5).astype(np.uint8)), out_valid


def layered_zoom(
    view: Image, mask: LayerMask, f_fg: float, f_bg: float, params: CloseupParams
) -> Image:
    """Depth-layered magnification: foreground by Z, background by Z_bg.

    ``Z_bg = 1 + (Z - 1) * f_bg / f_fg``; with f_bg == f_fg this is a uniform
    zoom, and content with zero flow never moves however large Z grows.
    """
    if (view.width, view.height) != (mask.width, mask.height):
        raise DimensionMismatchError("view and mask dimensions differ")
    image, _ = _layered_zoom_masked(
        view, np.ones((view.height, view.width), dtype=bool), mask, f_fg, f_bg, params
    )
    return image


@dataclass(frozen=True)
class CloseupRender:
    """Close-up image plus a flag for the degenerate-segmentation fallback."""

    image: Image
    degenerate_fallback: bool


def _median_or_none(values: np.ndarray) -> float | None:
    if values.size == 0:
        return None
    return float(np.median(values))


def closeup_render(
    img1: Image,
    img2: Image,
    f12: FlowField,
    f21: FlowField,
    a: float,
    params: CloseupParams,
    view: ViewResult | None = None,
) -> CloseupRender:
    """Close-up with explicit fallback reporting (see :func:`closeup_fused`)."""
    if not 0.0 <= a <= 1.0:
        raise InvalidParameterError(f"a must lie in [0, 1], got {a}")
    if view is None:
        view = synthesize_view(img1, img2, f12, f21, a)
    if params.zoom == 1.0:
        return CloseupRender(view.image, False)

    warps = [
        forward_warp(img1, scale_flow(f12, a)),
        forward_warp(img2, scale_flow(f21, 1.0 - a)),
    ]
    zoomed: list[tuple[Image, np.ndarray]] = []
    for wimg, wvalid, wmag in warps:
        try:
            tau = auto_tau(wmag) if params.tau == "auto" else float(params.tau)
        except DegenerateFieldError:
            return CloseupRender(uniform_zoom(view.image, params.zoom, params.center), True)
        mask = segment_foreground(wmag, tau)
        f_fg = _median_or_none(wmag.values[mask.bits])
        f_bg = _median_or_none(wmag.values[~mask.bits])
        if f_fg is None or f_bg is None or f_fg <= 0:
            return CloseupRender(uniform_zoom(view.image, params.zoom, params.center), True)
        f_bg = min(f_bg, f_fg)
        zoomed.append(_layered_zoom_masked(wimg, wvalid, mask, f_fg, f_bg, params))

    (cu1, valid1), (cu2, valid2) = zoomed
    image, _ = fuse_views(cu1, valid1, cu2, valid2, a)
    return CloseupRender(image, False)


def closeup_fused(
    img1: Image,
    img2: Image,
    f12: FlowField,
    f21: FlowField,
    a: float,
    params: CloseupParams,
) -> Image:
    """Render the close-up viewpoint: warp both sources, zoom each in layers,
    fuse.

    Each warped view is segmented on its own magnitude map (median magnitudes
    inside/outside the mask give f_fg/f_bg) and layer-zoomed, then the two
    close-ups fuse exactly like plain view synthesis. If segmentation
    degenerates (constant magnitudes, or an empty layer) the result falls
    back to a uniform zoom of the synthesized view.
    """
    return closeup_render(img1, img2, f12, f21, a, params).image
