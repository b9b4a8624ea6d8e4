"""Histogram-anchored color transfer between an image pair.

Channel intensities are remapped through a monotone 3-segment curve (gamma |
linear | gamma) anchored at the source's 5% and 95% histogram percentiles
mapping to the reference's. Segment exponents are solved from slope
continuity at both joints, so the curve has no free parameters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateHistogramError
from .raster import Image

CHANNELS = ("r", "g", "b")


def _round_half_up(x):
    return np.floor(x + 0.5)


def percentile(image: Image, channel: str, p: float) -> int:
    """Smallest intensity whose cumulative histogram count reaches p of all pixels.

    The count target is p * (width * height) rounded half-up, so e.g. a
    256-pixel gradient yields 12 at p=0.05 and 242 at p=0.95.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    ch = CHANNELS.index(channel)
    counts = np.bincount(image.pixels[:, :, ch].ravel(), minlength=256)
    target = max(1, int(_round_half_up(p * image.width * image.height)))
    return int(np.searchsorted(np.cumsum(counts), target))


@dataclass(frozen=True)
class ChannelCurve:
    """One channel's fitted transfer segments plus its 256-entry lookup table."""

    s1: int
    s2: int
    r1: int
    r2: int
    gamma_low: float | None
    gamma_high: float | None
    table: np.ndarray

    @property
    def slope(self) -> float:
        if self.s2 == self.s1:
            return 1.0
        return (self.r2 - self.r1) / (self.s2 - self.s1)

    def evaluate(self, x: float) -> float:
        """Unrounded piecewise curve; the table is this rounded half-up."""
        m = self.slope
        if x < self.s1:
            if self.gamma_low is None:
                return max(0.0, self.r1 + m * (x - self.s1))
            return self.r1 * (x / self.s1) ** self.gamma_low
        if x <= self.s2:
            return self.r1 + m * (x - self.s1)
        if self.gamma_high is None:
            return min(255.0, self.r2 + m * (x - self.s2))
        return 255.0 - (255.0 - self.r2) * ((255.0 - x) / (255.0 - self.s2)) ** self.gamma_high


@dataclass(frozen=True)
class TransferCurve:
    """Per-channel intensity remap fitted by :func:`fit_transfer`."""

    r: ChannelCurve
    g: ChannelCurve
    b: ChannelCurve

    def channel(self, name: str) -> ChannelCurve:
        return getattr(self, name)

    def to_json(self) -> str:
        payload = {
            name: {
                "s1": c.s1, "s2": c.s2, "r1": c.r1, "r2": c.r2,
                "gamma_low": c.gamma_low, "gamma_high": c.gamma_high,
            }
            for name in CHANNELS
            for c in (self.channel(name),)
        }
        return json.dumps(payload, indent=2)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def from_json(cls, text: str) -> "TransferCurve":
        payload = json.loads(text)
        curves = {
            name: _build_channel(d["s1"], d["s2"], d["r1"], d["r2"])
            for name, d in payload.items()
        }
        return cls(**curves)

    @classmethod
    def load(cls, path) -> "TransferCurve":
        return cls.from_json(Path(path).read_text())


def _identity_channel(s1: int, s2: int) -> ChannelCurve:
    return ChannelCurve(s1, s2, s1, s2, None, None, np.arange(256, dtype=np.uint8))


def _build_channel(s1: int, s2: int, r1: int, r2: int) -> ChannelCurve:
    if s1 == s2:
        if (r1, r2) == (s1, s2):
            return _identity_channel(s1, s2)
        raise DegenerateHistogramError(
            f"source percentiles collapse (s1 == s2 == {s1}); cannot fit curve"
        )
    m = (r2 - r1) / (s2 - s1)
    # Exponents from slope continuity at the joints; the power form needs a
    # nonzero target value, otherwise the linear mid-segment is extended.
    gamma_low = m * s1 / r1 if (s1 > 0 and r1 > 0 and m > 0) else None
    gamma_high = (
        m * (255 - s2) / (255 - r2) if (s2 < 255 and r2 < 255 and m > 0) else None
    )
    curve = ChannelCurve(s1, s2, r1, r2, gamma_low, gamma_high,
                         np.arange(256, dtype=np.uint8))
    xs = np.arange(256, dtype=np.float64)
    values = np.array([curve.evaluate(float(x)) for x in xs])
    table = np.clip(_round_half_up(values), 0, 255)
    table[0] = 0
    table[255] = 255
    table = np.maximum.accumulate(table).astype(np.uint8)
    return ChannelCurve(s1, s2, r1, r2, gamma_low, gamma_high, table)


def fit_transfer(src: Image, reference: Image) -> TransferCurve:
    """Fit the per-channel 3-segment curve mapping src's colors to reference's.

    Anchors: s1/s2 at src's 5%/95% percentiles, r1/r2 at the reference's.
    A channel whose src percentiles coincide only fits when the reference's
    match too (identity); otherwise DegenerateHistogramError is raised.
    """
    curves = {}
    for name in CHANNELS:
        s1 = percentile(src, name, 0.05)
        s2 = percentile(src, name, 0.95)
        r1 = percentile(reference, name, 0.05)
        r2 = percentile(reference, name, 0.95)
        curves[name] = _build_channel(s1, s2, r1, r2)
    return TransferCurve(**curves)


def curve_eval(curve: TransferCurve, channel: str, x: int) -> int:
    """Table lookup for one intensity."""
    if not 0 <= x <= 255:
        raise ValueError("intensity must lie in [0, 255]")
    return int(curve.channel(channel).table[x])


def apply_transfer(image: Image, curve: TransferCurve) -> Image:
    """Map every pixel channel through the fitted lookup tables."""
    out = np.empty_like(image.pixels)
    for ci, name in enumerate(CHANNELS):
        out[:, :, ci] = curve.channel(name).table[image.pixels[:, :, ci]]
    return Image(image.width, image.height, out)


def identity_curve() -> TransferCurve:
    return TransferCurve(*(_identity_channel(0, 255) for _ in CHANNELS))
