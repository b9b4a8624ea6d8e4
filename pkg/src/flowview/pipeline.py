"""End-to-end composition: register, color-match, flow, synthesize.

Intermediate artifacts live in a work directory keyed by a content hash of
the inputs and parameters, so repeat runs (and the render service) reuse the
expensive flow computation. Layout per pair::

    <workdir>/<hash>/rect_1.ppm   rectified reference image
    <workdir>/<hash>/rect_2.ppm   image 2 warped into image 1's frame
    <workdir>/<hash>/curve.json   fitted color transfer curve
    <workdir>/<hash>/fwd.flo      flow image1 -> image2
    <workdir>/<hash>/back.flo     flow image2 -> image1

``VVS_WORKDIR`` overrides the cache location.
"""

from __future__ import annotations

import hashlib
import logging
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from .closeup import CloseupParams, closeup_fused
from .color import TransferCurve, apply_transfer, fit_transfer
from .errors import DimensionMismatchError, FlowViewError, PipelineError
from .flow import FlowParams, bidirectional_flow
from .raster import FlowField, Image, load_image, read_flo, save_image, write_flo
from .registration import (
    estimate_homography,
    find_correspondences,
    load_correspondences,
    ransac_homography,
    warp_perspective,
)
from .synthesis import ViewResult, synthesize_view

log = logging.getLogger(__name__)

WORKDIR_ENV = "VVS_WORKDIR"
CACHE_FILES = ("rect_1.ppm", "rect_2.ppm", "curve.json", "fwd.flo", "back.flo")


@dataclass(frozen=True)
class PairConfig:
    """Inputs and knobs identifying one image pair run."""

    path1: Path
    path2: Path
    correspondences: Path | None = None
    auto_register: bool = False
    flow_params: FlowParams = field(default_factory=FlowParams)
    flow_path: Path | None = None
    flow_back_path: Path | None = None


@dataclass(frozen=True)
class PreparedPair:
    """Rectified, color-matched pair with its bidirectional flow."""

    img1: Image
    img2: Image
    f12: FlowField
    f21: FlowField
    curve: TransferCurve
    pair_id: str
    cache_dir: Path


def default_workdir() -> Path:
    env = os.environ.get(WORKDIR_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "vvs"


def pair_hash(config: PairConfig) -> str:
    """Content hash over inputs and parameters; keys the cache directory."""
    h = hashlib.sha256()
    for path in (config.path1, config.path2):
        h.update(Path(path).read_bytes())
        h.update(b"\x00")
    if config.correspondences is not None:
        h.update(Path(config.correspondences).read_bytes())
    h.update(b"\x01" if config.auto_register else b"\x02")
    h.update(repr(config.flow_params).encode())
    for flo in (config.flow_path, config.flow_back_path):
        if flo is not None:
            h.update(Path(flo).read_bytes())
        h.update(b"\x03")
    return h.hexdigest()[:16]


@contextmanager
def _stage(name: str):
    try:
        yield
    except PipelineError:
        raise
    except FlowViewError as exc:
        raise PipelineError(name, str(exc)) from exc


def _load_cached(cache_dir: Path, pair_id: str) -> PreparedPair:
    img1 = load_image(cache_dir / "rect_1.ppm")
    rect2 = load_image(cache_dir / "rect_2.ppm")
    curve = TransferCurve.load(cache_dir / "curve.json")
    img2 = apply_transfer(rect2, curve)
    f12 = read_flo(cache_dir / "fwd.flo")
    f21 = read_flo(cache_dir / "back.flo")
    return PreparedPair(img1, img2, f12, f21, curve, pair_id, cache_dir)


def prepare_pair(config: PairConfig, workdir: Path | None = None) -> PreparedPair:
    """Run (or reload) everything up to and including flow estimation."""
    workdir = workdir if workdir is not None else default_workdir()
    pair_id = pair_hash(config)
    cache_dir = workdir / pair_id
    if all((cache_dir / name).exists() for name in CACHE_FILES):
        log.info("cache hit for pair %s", pair_id)
        return _load_cached(cache_dir, pair_id)

    with _stage("load"):
        img1 = load_image(config.path1)
        img2 = load_image(config.path2)

    with _stage("register"):
        if config.correspondences is not None:
            pairs = load_correspondences(config.correspondences)
            homography = estimate_homography(pairs)
            rect2 = warp_perspective(img2, homography, img1.width, img1.height)
        elif config.auto_register:
            pairs = find_correspondences(img1, img2)
            homography = ransac_homography(pairs)
            rect2 = warp_perspective(img2, homography, img1.width, img1.height)
        else:
            if (img1.width, img1.height) != (img2.width, img2.height):
                raise DimensionMismatchError(
                    "images differ in size and no correspondences were given"
                )
            rect2 = img2

    with _stage("colorfix"):
        curve = fit_transfer(rect2, img1)
        img2_fixed = apply_transfer(rect2, curve)

    with _stage("flow"):
        if config.flow_path is not None and config.flow_back_path is not None:
            f12 = read_flo(config.flow_path)
            f21 = read_flo(config.flow_back_path)
        else:
            f12, f21 = bidirectional_flow(img1, img2_fixed, config.flow_params)

    cache_dir.mkdir(parents=True, exist_ok=True)
    save_image(img1, cache_dir / "rect_1.ppm")
    save_image(rect2, cache_dir / "rect_2.ppm")
    curve.save(cache_dir / "curve.json")
    write_flo(f12, cache_dir / "fwd.flo")
    write_flo(f21, cache_dir / "back.flo")
    log.info("cache store for pair %s", pair_id)
    return PreparedPair(img1, img2_fixed, f12, f21, curve, pair_id, cache_dir)


def run_pipeline(
    config: PairConfig,
    a: float,
    closeup: CloseupParams | None = None,
    workdir: Path | None = None,
):
    """Full render at viewpoint fraction ``a``.

    Returns a :class:`ViewResult`, or an :class:`Image` when close-up
    parameters are given.
    """
    prep = prepare_pair(config, workdir)
    with _stage("synthesize"):
        view: ViewResult = synthesize_view(prep.img1, prep.img2, prep.f12, prep.f21, a)
        if closeup is None:
            return view
    with _stage("closeup"):
        return closeup_fused(prep.img1, prep.img2, prep.f12, prep.f21, a, closeup)
