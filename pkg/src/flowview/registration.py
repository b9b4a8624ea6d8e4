"""Homography estimation from correspondences and perspective warping.

Calibration data is never available for casual image pairs, so the composite
plane-to-plane map is estimated directly from point correspondences with a
normalized DLT. Correspondences come either from a user-supplied JSON file or
from a built-in grid of normalized-cross-correlation patch matches filtered
by RANSAC.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateConfigurationError,
    PointAtInfinityError,
    SingularMatrixError,
    TooFewPointsError,
)
from .raster import Image, sample_image_grid, to_gray

RANSAC_THRESHOLD_PX = 2.0
RANSAC_ITERATIONS = 1000
RANSAC_SEED = 42


@dataclass(frozen=True)
class Homography:
    """3x3 projective transform, row-major."""

    m: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.m, dtype=np.float64)
        if arr.shape != (3, 3):
            raise ValueError("homography must be 3x3")
        object.__setattr__(self, "m", arr)

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    @classmethod
    def translation(cls, tx: float, ty: float) -> "Homography":
        m = np.eye(3)
        m[0, 2] = tx
        m[1, 2] = ty
        return cls(m)

    @classmethod
    def scaling(cls, sx: float, sy: float | None = None) -> "Homography":
        if sy is None:
            sy = sx
        return cls(np.diag([sx, sy, 1.0]))

    def normalized(self) -> "Homography":
        """Fix scale so m[2][2] == 1."""
        w = self.m[2, 2]
        if abs(w) < 1e-12:
            raise SingularMatrixError("cannot normalize: m[2][2] ~ 0")
        return Homography(self.m / w)

    def inverse(self) -> "Homography":
        if abs(np.linalg.det(self.m)) < 1e-12:
            raise SingularMatrixError("homography is singular")
        return Homography(np.linalg.inv(self.m))

    def __matmul__(self, other: "Homography") -> "Homography":
        return Homography(self.m @ other.m)


@dataclass(frozen=True)
class Correspondence:
    """A matched point pair: src in image-2 coordinates, dst in image-1."""

    src: tuple[float, float]
    dst: tuple[float, float]

    def __post_init__(self):
        if not (np.isfinite(self.src).all() and np.isfinite(self.dst).all()):
            raise ValueError("correspondence coordinates must be finite")


def load_correspondences(path) -> list[Correspondence]:
    """Read a JSON array of {"src": [x, y], "dst": [x, y]} objects."""
    entries = json.loads(Path(path).read_text())
    return [
        Correspondence(src=(float(e["src"][0]), float(e["src"][1])),
                       dst=(float(e["dst"][0]), float(e["dst"][1])))
        for e in entries
    ]


def save_correspondences(pairs: list[Correspondence], path) -> None:
    Path(path).write_text(json.dumps(
        [{"src": list(p.src), "dst": list(p.dst)} for p in pairs], indent=2
    ))


def apply_homography(h: Homography, p: tuple[float, float]) -> tuple[float, float]:
    """Projective application with divide: (x'/w, y'/w) for m @ (x, y, 1).

    Raises:
        PointAtInfinityError: |w| <= 1e-12 after the transform.
    """
    vec = h.m @ np.array([p[0], p[1], 1.0])
    if abs(vec[2]) <= 1e-12:
        raise PointAtInfinityError(f"point {p} maps to infinity")
    return (vec[0] / vec[2], vec[1] / vec[2])


def _apply_many(h: Homography, pts: np.ndarray) -> np.ndarray:
    """Apply to an (N, 2) array; rows with w ~ 0 come back as inf."""
    homog = np.column_stack([pts, np.ones(len(pts))])
    out = homog @ h.m.T
    w = out[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        res = out[:, :2] / w[:, None]
    res[np.abs(w) <= 1e-12] = np.inf
    return res


def _normalize_points(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Similarity transform taking the set to centroid 0, mean distance sqrt(2)."""
    centroid = pts.mean(axis=0)
    shifted = pts - centroid
    mean_dist = np.sqrt((shifted ** 2).sum(axis=1)).mean()
    if mean_dist < 1e-12:
        raise DegenerateConfigurationError("all points coincide")
    s = np.sqrt(2.0) / mean_dist
    t = np.array([
        [s, 0.0, -s * centroid[0]],
        [0.0, s, -s * centroid[1]],
        [0.0, 0.0, 1.0],
    ])
    return shifted * s, t


def estimate_homography(pairs: list[Correspondence]) -> Homography:
    """Normalized DLT: exact (<= 1e-6 px reprojection) on noiseless inputs.

    Raises:
        TooFewPointsError: fewer than 4 pairs.
        DegenerateConfigurationError: conditioning indicates a (near-)collinear
            or coincident configuration.
    """
    if len(pairs) < 4:
        raise TooFewPointsError(f"need >= 4 correspondences, got {len(pairs)}")
    src = np.array([p.src for p in pairs], dtype=np.float64)
    dst = np.array([p.dst for p in pairs], dtype=np.float64)

    src_n, t_src = _normalize_points(src)
    dst_n, t_dst = _normalize_points(dst)

    n = len(pairs)
    a = np.zeros((2 * n, 9))
    x, y = src_n[:, 0], src_n[:, 1]
    xp, yp = dst_n[:, 0], dst_n[:, 1]
    a[0::2, 0] = -x
    a[0::2, 1] = -y
    a[0::2, 2] = -1.0
    a[0::2, 6] = x * xp
    a[0::2, 7] = y * xp
    a[0::2, 8] = xp
    a[1::2, 3] = -x
    a[1::2, 4] = -y
    a[1::2, 5] = -1.0
    a[1::2, 6] = x * yp
    a[1::2, 7] = y * yp
    a[1::2, 8] = yp

    _, sigma, vt = np.linalg.svd(a)
    # A second near-zero singular value means the null space is not unique:
    # some 3 of the defining points are collinear.
    if sigma[-2] < 1e-9 * max(sigma[0], 1.0):
        raise DegenerateConfigurationError(
            "correspondence configuration is degenerate (collinear points?)"
        )
    h_norm = vt[-1].reshape(3, 3)
    h = np.linalg.inv(t_dst) @ h_norm @ t_src
    if abs(h[2, 2]) < 1e-12:
        raise DegenerateConfigurationError("estimated homography has m[2][2] ~ 0")
    h = h / h[2, 2]
    if abs(np.linalg.det(h)) < 1e-12:
        raise DegenerateConfigurationError("estimated homography is singular")
    return Homography(h)


def compose_rectifying(h1: Homography, h2: Homography) -> Homography:
    """Rectifying map H' = H1 . H2^-1, normalized to m[2][2] == 1.

    Raises:
        SingularMatrixError: h2 is not invertible.
    """
    return (h1 @ h2.inverse()).normalized()


def warp_perspective(image: Image, h: Homography, out_w: int, out_h: int) -> Image:
    """Inverse-map warp: output pixel q samples the input at H^-1 q.

    Pixels whose preimage falls outside the source are black.
    """
    warped, _ = warp_perspective_masked(image, h, out_w, out_h)
    return warped


def warp_perspective_masked(
    image: Image, h: Homography, out_w: int, out_h: int
) -> tuple[Image, np.ndarray]:
    """Like :func:`warp_perspective` but also returns the validity mask."""
    hinv = h.inverse().m
    ys, xs = np.mgrid[0:out_h, 0:out_w].astype(np.float64)
    denom = hinv[2, 0] * xs + hinv[2, 1] * ys + hinv[2, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        sx = (hinv[0, 0] * xs + hinv[0, 1] * ys + hinv[0, 2]) / denom
        sy = (hinv[1, 0] * xs + hinv[1, 1] * ys + hinv[1, 2]) / denom
    # small tolerance so float noise in an estimated H cannot knock
    # exact-border pixels outside the source
    eps = 1e-6
    valid = (
        (np.abs(denom) > 1e-12)
        & (sx >= -eps) & (sx <= image.width - 1.0 + eps)
        & (sy >= -eps) & (sy <= image.height - 1.0 + eps)
    )
    sx = np.where(valid, sx, 0.0)
    sy = np.where(valid, sy, 0.0)
    samples = sample_image_grid(image, sx, sy)
    out = np.where(valid[:, :, None], np.floor(samples + 0.5), 0.0)
    return Image(out_w, out_h, out.astype(np.uint8)), valid


# ---------------------------------------------------------------------------
# automatic correspondences: NCC grid matching + RANSAC
# ---------------------------------------------------------------------------

def find_correspondences(
    img1: Image,
    img2: Image,
    grid_step: int = 32,
    patch_radius: int = 8,
    search_radius: int = 24,
    min_score: float = 0.6,
) -> list[Correspondence]:
    """Coarse grid of NCC patch matches from image 2 into image 1.

    For each grid point in image 2, the best normalized-cross-correlation
    match inside a search window of image 1 becomes a candidate pair. Flat
    patches (no texture) and weak peaks are dropped.
    """
    g1 = to_gray(img1).values
    g2 = to_gray(img2).values
    h, w = g2.shape
    pr, sr = patch_radius, search_radius
    margin = pr + sr
    pairs: list[Correspondence] = []
    if 2 * margin >= min(h, w):
        return pairs

    win = np.lib.stride_tricks.sliding_window_view(g1, (2 * pr + 1, 2 * pr + 1))

    for py in range(margin, h - margin, grid_step):
        for px in range(margin, w - margin, grid_step):
            patch = g2[py - pr:py + pr + 1, px - pr:px + pr + 1]
            pvec = patch - patch.mean()
            pnorm = np.linalg.norm(pvec)
            if pnorm < 1e-6:
                continue
            y0, x0 = py - sr - pr, px - sr - pr
            cand = win[y0:y0 + 2 * sr + 1, x0:x0 + 2 * sr + 1]
            flat = cand.reshape(cand.shape[0], cand.shape[1], -1)
            means = flat.mean(axis=2, keepdims=True)
            centered = flat - means
            norms = np.linalg.norm(centered, axis=2)
            scores = centered @ pvec.ravel()
            with np.errstate(divide="ignore", invalid="ignore"):
                ncc = np.where(norms > 1e-6, scores / (norms * pnorm), -1.0)
            best = np.unravel_index(np.argmax(ncc), ncc.shape)
            if ncc[best] < min_score:
                continue
            dst = (float(px - sr + best[1]), float(py - sr + best[0]))
            pairs.append(Correspondence(src=(float(px), float(py)), dst=dst))
    return pairs


def ransac_homography(
    pairs: list[Correspondence],
    threshold: float = RANSAC_THRESHOLD_PX,
    iterations: int = RANSAC_ITERATIONS,
    seed: int = RANSAC_SEED,
) -> Homography:
    """RANSAC wrapper around :func:`estimate_homography`.

    Samples minimal 4-point subsets, keeps the consensus with the most
    inliers (reprojection < ``threshold`` px), then refits on all inliers.
    """
    if len(pairs) < 4:
        raise TooFewPointsError(f"need >= 4 correspondences, got {len(pairs)}")
    src = np.array([p.src for p in pairs])
    dst = np.array([p.dst for p in pairs])
    rng = np.random.default_rng(seed)
    best_inliers: np.ndarray | None = None
    best_count = 0
    for _ in range(iterations):
        idx = rng.choice(len(pairs), size=4, replace=False)
        try:
            h = estimate_homography([pairs[i] for i in idx])
        except DegenerateConfigurationError:
            continue
        proj = _apply_many(h, src)
        err = np.sqrt(((proj - dst) ** 2).sum(axis=1))
        inliers = err < threshold
        count = int(inliers.sum())
        if count > best_count:
            best_count = count
            best_inliers = inliers
    if best_inliers is None or best_count < 4:
        raise DegenerateConfigurationError("RANSAC found no 4-point consensus")
    return estimate_homography([p for p, ok in zip(pairs, best_inliers) if ok])
