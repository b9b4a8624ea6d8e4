"""Image, flow-field and scalar-field containers plus file I/O, sampling and pyramids.

Conventions used throughout the package:

* pixel grids are indexed ``(y, x)`` row-major, with ``x`` growing rightwards
  and ``y`` downwards;
* coordinates are continuous, with integer coordinates at texel centers;
* out-of-range samples clamp to the nearest edge texel.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import BadMagicError, CorruptDataError, UnsupportedFormatError

FLO_MAGIC = 202021.25

# Rec. 601 luma weights; the conversion feeding the flow solver is fixed so
# results are reproducible regardless of input color content.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class Image:
    """8-bit RGB raster, pixels stored as a (height, width, 3) uint8 array."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")
        if self.pixels.shape != (self.height, self.width, 3):
            raise ValueError(
                f"pixel array shape {self.pixels.shape} does not match "
                f"{self.height}x{self.width}x3"
            )
        if self.pixels.dtype != np.uint8:
            raise ValueError("pixels must be uint8")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Image":
        arr = np.asarray(arr)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError("expected (H, W, 3) array")
        if arr.dtype != np.uint8:
            if np.any((arr < 0) | (arr > 255)):
                raise ValueError("channel values must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        return cls(width=arr.shape[1], height=arr.shape[0], pixels=arr)


@dataclass(frozen=True)
class GrayImage:
    """Floating-point luminance raster with values in [0, 1]."""

    width: int
    height: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.height, self.width):
            raise ValueError("value array shape does not match dimensions")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "GrayImage":
        arr = np.asarray(arr, dtype=np.float64)
        return cls(width=arr.shape[1], height=arr.shape[0], values=arr)


@dataclass(frozen=True)
class FlowField:
    """Per-pixel (u, v) displacements in pixels, stored (H, W, 2) float32."""

    width: int
    height: int
    vectors: np.ndarray

    def __post_init__(self):
        if self.vectors.shape != (self.height, self.width, 2):
            raise ValueError("vector array shape does not match dimensions")
        if self.vectors.dtype != np.float32:
            raise ValueError("flow vectors must be float32")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("flow vectors must be finite")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "FlowField":
        arr = np.ascontiguousarray(arr, dtype=np.float32)
        return cls(width=arr.shape[1], height=arr.shape[0], vectors=arr)

    @classmethod
    def zeros(cls, width: int, height: int) -> "FlowField":
        return cls(width, height, np.zeros((height, width, 2), dtype=np.float32))

    @property
    def u(self) -> np.ndarray:
        return self.vectors[:, :, 0]

    @property
    def v(self) -> np.ndarray:
        return self.vectors[:, :, 1]


@dataclass(frozen=True)
class ScalarField:
    """Non-negative per-pixel scalar values, e.g. flow magnitude."""

    width: int
    height: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.height, self.width):
            raise ValueError("value array shape does not match dimensions")
        if np.any(self.values < 0):
            raise ValueError("scalar field must be non-negative")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ScalarField":
        arr = np.asarray(arr, dtype=np.float64)
        return cls(width=arr.shape[1], height=arr.shape[0], values=arr)


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------

def _read_ppm_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Next whitespace-delimited token after ``pos``, skipping '#' comments."""
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace():
        pos += 1
    if start == pos:
        raise CorruptDataError("unexpected end of PPM header")
    return data[start:pos], pos


def load_image(path) -> Image:
    """Decode a binary P6 PPM (maxval 255) or an 8-bit RGB PNG.

    Raises:
        FileNotFoundError: the path does not exist.
        UnsupportedFormatError: the file is neither P6 PPM nor PNG.
        CorruptDataError: the payload is truncated or inconsistent.
    """
    path = Path(path)
    data = path.read_bytes()
    if data[:2] == b"P6":
        return _decode_ppm(data)
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return _decode_png(path)
    raise UnsupportedFormatError(f"{path}: not a P6 PPM or PNG file")


def _decode_ppm(data: bytes) -> Image:
    try:
        tok, pos = _read_ppm_token(data, 2)
        w = int(tok)
        tok, pos = _read_ppm_token(data, pos)
        h = int(tok)
        tok, pos = _read_ppm_token(data, pos)
        maxval = int(tok)
    except ValueError as exc:
        raise CorruptDataError(f"malformed PPM header: {exc}") from exc
    if maxval != 255:
        raise UnsupportedFormatError(f"PPM maxval {maxval} unsupported (need 255)")
    if w < 1 or h < 1:
        raise CorruptDataError("PPM dimensions must be positive")
    pos += 1  # single whitespace byte separates header from payload
    payload = data[pos:pos + 3 * w * h]
    if len(payload) < 3 * w * h:
        raise CorruptDataError(
            f"PPM payload truncated: expected {3 * w * h} bytes, got {len(payload)}"
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(h, w, 3).copy()
    return Image(w, h, pixels)


def _decode_png(path: Path) -> Image:
    from PIL import Image as PILImage, UnidentifiedImageError

    try:
        with PILImage.open(path) as im:
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise CorruptDataError(f"{path}: undecodable PNG") from exc
    return Image.from_array(arr)


def save_image(image: Image, path) -> None:
    """Write ``image`` as binary P6 PPM (``.ppm``) or PNG (anything else).

    PPM output round-trips bit-exactly through :func:`load_image`.
    """
    path = Path(path)
    if path.suffix.lower() == ".ppm":
        header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
        path.write_bytes(header + image.pixels.tobytes())
    else:
        from PIL import Image as PILImage

        PILImage.fromarray(image.pixels, mode="RGB").save(path, format="PNG")


def encode_png(image: Image) -> bytes:
    """PNG-encode with fixed settings so identical images yield identical bytes."""
    import io

    from PIL import Image as PILImage

    buf = io.BytesIO()
    PILImage.fromarray(image.pixels, mode="RGB").save(
        buf, format="PNG", optimize=False, compress_level=6
    )
    return buf.getvalue()


def write_flo(flow: FlowField, path) -> None:
    """Write Middlebury .flo: magic float 202021.25, int32 w/h, float32 (u,v)."""
    path = Path(path)
    header = struct.pack("<fii", FLO_MAGIC, flow.width, flow.height)
    body = np.ascontiguousarray(flow.vectors, dtype="<f4").tobytes()
    path.write_bytes(header + body)


def read_flo(path) -> FlowField:
    """Read a Middlebury .flo file written by :func:`write_flo`.

    Raises:
        BadMagicError: wrong magic number.
        CorruptDataError: truncated payload or nonsensical dimensions.
    """
    data = Path(path).read_bytes()
    if len(data) < 12:
        raise CorruptDataError(".flo file shorter than its 12-byte header")
    magic, w, h = struct.unpack("<fii", data[:12])
    if magic != FLO_MAGIC:
        raise BadMagicError(f"bad .flo magic {magic!r} (expected {FLO_MAGIC})")
    if w < 1 or h < 1:
        raise CorruptDataError(f".flo dimensions {w}x{h} invalid")
    expected = 8 * w * h
    if len(data) - 12 < expected:
        raise CorruptDataError(
            f".flo payload truncated: expected {expected} bytes, got {len(data) - 12}"
        )
    vectors = np.frombuffer(data[12:12 + expected], dtype="<f4").reshape(h, w, 2).copy()
    return FlowField(w, h, vectors)


# ---------------------------------------------------------------------------
# conversions and sampling
# ---------------------------------------------------------------------------

def to_gray(image: Image) -> GrayImage:
    """Luminance in [0, 1] with fixed 0.299/0.587/0.114 weights."""
    w = np.asarray(LUMA_WEIGHTS)
    values = image.pixels.astype(np.float64) @ w / 255.0
    return GrayImage(image.width, image.height, values)


def _bilinear(values: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorized bilinear sampling of a 2-D array with clamp-to-edge."""
    h, w = values.shape
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    top = values[y0, x0] * (1.0 - fx) + values[y0, x1] * fx
    bot = values[y1, x0] * (1.0 - fx) + values[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def sample_bilinear(image, x: float, y: float):
    """Bilinearly sample one point; exact at integer coordinates.

    Returns a float for :class:`GrayImage` input, a float ``(r, g, b)`` triple
    for :class:`Image` input.
    """
    if isinstance(image, GrayImage):
        return float(_bilinear(image.values, np.float64(x), np.float64(y)))
    if isinstance(image, Image):
        px = image.pixels.astype(np.float64)
        return tuple(
            float(_bilinear(px[:, :, c], np.float64(x), np.float64(y)))
            for c in range(3)
        )
    raise TypeError(f"cannot sample {type(image).__name__}")


def sample_image_grid(image: Image, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear RGB samples at coordinate arrays, as float64 (..., 3)."""
    px = image.pixels.astype(np.float64)
    out = np.empty(xs.shape + (3,), dtype=np.float64)
    for c in range(3):
        out[..., c] = _bilinear(px[:, :, c], xs, ys)
    return out


def sample_gray_grid(image: GrayImage, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    return _bilinear(image.values, xs, ys)


# ---------------------------------------------------------------------------
# pyramids and flow helpers
# ---------------------------------------------------------------------------

def pyramid_levels_for(width: int, height: int, levels: int, min_dim: int = 8) -> int:
    """Clamp the level count so the coarsest level stays >= min_dim square."""
    usable = 1
    w, h = width, height
    while usable < levels:
        w2 = -(-w // 2)
        h2 = -(-h // 2)
        if w2 < min_dim or h2 < min_dim:
            break
        w, h = w2, h2
        usable += 1
    return usable


def build_pyramid(image: GrayImage, levels: int) -> list[GrayImage]:
    """Gaussian pyramid: blur (sigma=1.0) then decimate by 2, ceil dimensions.

    Level 0 is the input itself. The level count is reduced automatically so
    the coarsest level is at least 8x8.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    levels = pyramid_levels_for(image.width, image.height, levels)
    out = [image]
    current = image.values
    for _ in range(1, levels):
        blurred = ndimage.gaussian_filter(current, sigma=1.0, mode="nearest")
        current = blurred[::2, ::2]
        out.append(GrayImage.from_array(current))
    return out


def flow_magnitude(flow: FlowField) -> ScalarField:
    """Per-pixel Euclidean norm of the flow vectors (the depth proxy)."""
    vec = flow.vectors.astype(np.float64)
    mag = np.hypot(vec[:, :, 0], vec[:, :, 1])
    return ScalarField(flow.width, flow.height, mag)
