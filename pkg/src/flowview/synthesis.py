"""Virtual viewpoint rendering by proportional flow interpolation.

Both sources are forward-splatted along their scaled flows and fused with
proximity weights. Splat conflicts are settled by a z-test on source flow
magnitude: larger flow means nearer surface, and the nearer surface occludes
exclusively (no blending across depth).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatchError, InvalidParameterError
from .raster import FlowField, Image, ScalarField, to_gray

MAGNITUDE_RESCALE_EPS = 1e-6


@dataclass(frozen=True)
class SynthesisParams:
    """Virtual viewpoint position as a fraction of the baseline."""

    a: float

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0:
            raise InvalidParameterError(f"a must lie in [0, 1], got {self.a}")

    @property
    def b(self) -> float:
        return 1.0 - self.a


@dataclass(frozen=True)
class ViewResult:
    """Fused virtual view plus validity mask and the flow-magnitude depth proxy."""

    image: Image
    valid: np.ndarray
    magnitude: ScalarField
    a: float


def _require_same_dims(*items) -> None:
    dims = {(it.width, it.height) for it in items}
    if len(dims) != 1:
        raise DimensionMismatchError(f"mismatched dimensions: {sorted(dims)}")


def scale_flow(flow: FlowField, s: float) -> FlowField:
    """Multiply every displacement by s (s >= 0; s in {0.25, 0.5, 0.75} are the
    usual operating points)."""
    return FlowField.from_array(flow.vectors.astype(np.float64) * s)


def forward_warp(image: Image, flow: FlowField) -> tuple[Image, np.ndarray, ScalarField]:
    """Splat source pixels along the flow; occlusions resolved by magnitude.

    Each source pixel contributes to the four integer neighbors of its target
    position with bilinear coverage weights; among all contributors of a
    target pixel the one with the largest source flow magnitude wins outright
    (ties break to the lower row-major source index). Returns the warped
    image, the per-pixel validity mask, and the winning source magnitudes.
    """
    _require_same_dims(image, flow)
    h, w = flow.height, flow.width
    n = h * w
    u = flow.vectors[:, :, 0].astype(np.float64).ravel()
    v = flow.vectors[:, :, 1].astype(np.float64).ravel()
    mag = np.hypot(u, v)

    ys, xs = np.mgrid[0:h, 0:w]
    tx = xs.ravel() + u
    ty = ys.ravel() + v
    x0 = np.floor(tx).astype(np.int64)
    y0 = np.floor(ty).astype(np.int64)
    fx = tx - x0
    fy = ty - y0

    src_idx = np.arange(n)
    tgt_parts = []
    for dx, dy, wgt in (
        (0, 0, (1.0 - fx) * (1.0 - fy)),
        (1, 0, fx * (1.0 - fy)),
        (0, 1, (1.0 - fx) * fy),
        (1, 1, fx * fy),
    ):
        gx = x0 + dx
        gy = y0 + dy
        keep = (wgt > 0.0) & (gx >= 0) & (gx < w) & (gy >= 0) & (gy < h)
        tgt_parts.append((gy[keep] * w + gx[keep], src_idx[keep], mag[keep]))

    tgt_all = np.concatenate([p[0] for p in tgt_parts])
    src_all = np.concatenate([p[1] for p in tgt_parts])
    mag_all = np.concatenate([p[2] for p in tgt_parts])

    out = np.zeros((n, 3), dtype=np.uint8)
    valid = np.zeros(n, dtype=bool)
    out_mag = np.zeros(n, dtype=np.float64)
    if tgt_all.size:
        order = np.lexsort((src_all, -mag_all, tgt_all))
        tgt_sorted = tgt_all[order]
        first = np.ones(tgt_sorted.size, dtype=bool)
        first[1:] = tgt_sorted[1:] != tgt_sorted[:-1]
        winners_tgt = tgt_sorted[first]
        winners_src = src_all[order][first]
        flat_pixels = image.pixels.reshape(n, 3)
        out[winners_tgt] = flat_pixels[winners_src]
        valid[winners_tgt] = True
        out_mag[winners_tgt] = mag[winners_src]

    return (
        Image(w, h, out.reshape(h, w, 3)),
        valid.reshape(h, w),
        ScalarField(w, h, out_mag.reshape(h, w)),
    )


def _nearest_fill(values: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Replace invalid entries by their nearest valid pixel's value."""
    if valid.all():
        return values
    if not valid.any():
        return values
    iy, ix = ndimage.distance_transform_edt(
        ~valid, return_distances=False, return_indices=True
    )
    filled = values.copy()
    filled[~valid] = values[iy, ix][~valid]
    return filled


def fuse_views(
    view1: Image,
    mask1: np.ndarray,
    view2: Image,
    mask2: np.ndarray,
    a: float,
) -> tuple[Image, np.ndarray]:
    """Weighted fusion of two warped views with cross- and nearest-filling.

    Where both views are valid the colors blend with weights (1-a, a); where
    only one is valid it wins; remaining holes copy their nearest valid pixel
    and stay flagged invalid in the returned mask.
    """
    _require_same_dims(view1, view2)
    if not 0.0 <= a <= 1.0:
        raise InvalidParameterError(f"a must lie in [0, 1], got {a}")
    c1 = view1.pixels.astype(np.float64)
    c2 = view2.pixels.astype(np.float64)
    both = mask1 & mask2
    blend = (1.0 - a) * c1 + a * c2
    out = np.where(both[:, :, None], blend,
                   np.where(mask1[:, :, None], c1,
                            np.where(mask2[:, :, None], c2, 0.0)))
    out = np.floor(out + 0.5).astype(np.uint8)
    valid = mask1 | mask2
    out = _nearest_fill(out, valid)
    return Image(view1.width, view1.height, out), valid


def synthesize_view(
    img1: Image, img2: Image, f12: FlowField, f21: FlowField, a: float
) -> ViewResult:
    """Render the collinear viewpoint at fraction a of the baseline.

    The forward flows scale to a*F12 and (1-a)*F21, both sources splat into
    the virtual frame, and the warps fuse with proximity weights. The fused
    magnitude map takes the larger (nearer) of the two warped magnitudes
    where both views land and is rescaled by 1/max(a, 1-a) so the depth
    proxy stays comparable across viewpoints.
    """
    if not 0.0 <= a <= 1.0:
        raise InvalidParameterError(f"a must lie in [0, 1], got {a}")
    _require_same_dims(img1, img2, f12, f21)
    f13 = scale_flow(f12, a)
    f24 = scale_flow(f21, 1.0 - a)
    im4, m4, mag4 = forward_warp(img1, f13)
    im5, m5, mag5 = forward_warp(img2, f24)
    image, valid = fuse_views(im4, m4, im5, m5, a)

    both = m4 & m5
    mg = np.where(both, np.maximum(mag4.values, mag5.values),
                  np.where(m4, mag4.values, np.where(m5, mag5.values, 0.0)))
    mg = _nearest_fill(mg, valid)
    mg = mg / max(a, 1.0 - a, MAGNITUDE_RESCALE_EPS)
    return ViewResult(image, valid, ScalarField(img1.width, img1.height, mg), a)


def overlay_rgb(v1: Image, v2: Image, v3: Image) -> Image:
    """Channel overlay for parallax inspection: r/g/b = luminance of v1/v2/v3.

    Edges displaced between the three viewpoints show up as color fringes.
    """
    _require_same_dims(v1, v2, v3)
    out = np.empty((v1.height, v1.width, 3), dtype=np.uint8)
    for c, img in enumerate((v1, v2, v3)):
        lum = to_gray(img).values * 255.0
        out[:, :, c] = np.floor(lum + 0.5).astype(np.uint8)
    return Image(v1.width, v1.height, out)
