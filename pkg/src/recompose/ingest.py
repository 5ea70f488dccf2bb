"""Scene ingestion: image/depth containers, extrapolation stand-in, RGB-D unprojection.

Camera convention used throughout the package: right-handed, the camera sits at
the origin looking down -z with y up; the image v axis points down.  Pixel
(u, v) of a w x h image maps to normalized device coordinates by the endpoint
rule, ndc_x = 2u/(w-1) - 1 and ndc_y = 1 - 2v/(h-1), so the first and last
pixel centers lie exactly on the frustum boundary.  The vertical field of view
spans the top and bottom pixel-center rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TARGET_LONG_SIDE = 512
PAD_PIXELS = 256
PAD_BLUR_SIZE = 9


class IngestError(ValueError):
    """Invalid scene input (bad dimensions, non-finite depth, ...)."""


@dataclass(frozen=True)
class Image:
    """RGB image, (h, w, 3) float64 array with channel values in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        d = self.data
        if not isinstance(d, np.ndarray) or d.ndim != 3 or d.shape[2] != 3:
            raise IngestError(f"image must be an (h, w, 3) array, got shape {getattr(d, 'shape', None)}")
        if d.shape[0] < 1 or d.shape[1] < 1:
            raise IngestError(f"image must be at least 1x1, got {d.shape[1]}x{d.shape[0]}")
        if not np.isfinite(d).all():
            raise IngestError("image contains non-finite values")
        if d.min() < 0.0 or d.max() > 1.0:
            raise IngestError("image channel values must lie in [0, 1]")
        object.__setattr__(self, "data", np.ascontiguousarray(d, dtype=np.float64))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @classmethod
    def from_uint8(cls, arr: np.ndarray) -> "Image":
        return cls(np.asarray(arr, dtype=np.float64) / 255.0)

    def to_uint8(self) -> np.ndarray:
        return np.floor(self.data * 255.0 + 0.5).astype(np.uint8)


@dataclass(frozen=True)
class DepthMap:
    """Per-pixel depth in scene units, (h, w) float64, strictly positive."""

    data: np.ndarray

    def __post_init__(self):
        d = self.data
        if not isinstance(d, np.ndarray) or d.ndim != 2:
            raise IngestError(f"depth must be an (h, w) array, got shape {getattr(d, 'shape', None)}")
        if not np.isfinite(d).all():
            raise IngestError("depth contains non-finite values")
        if d.min() <= 0.0:
            raise IngestError("depth values must be strictly positive")
        object.__setattr__(self, "data", np.ascontiguousarray(d, dtype=np.float64))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class ColoredPointCloud:
    """Camera-frame point positions with per-point RGB colors."""

    positions: np.ndarray  # (n, 3) float64
    colors: np.ndarray  # (n, 3) float64 in [0, 1]

    def __post_init__(self):
        p, c = self.positions, self.colors
        if p.ndim != 2 or p.shape[1] != 3:
            raise IngestError(f"positions must be (n, 3), got {p.shape}")
        if c.shape != p.shape:
            raise IngestError(f"colors shape {c.shape} does not match positions {p.shape}")
        if p.shape[0] < 1:
            raise IngestError("point cloud must contain at least one point")
        if not np.isfinite(p).all():
            raise IngestError("positions contain non-finite values")
        object.__setattr__(self, "positions", np.ascontiguousarray(p, dtype=np.float64))
        object.__setattr__(self, "colors", np.ascontiguousarray(c, dtype=np.float64))

    @property
    def count(self) -> int:
        return self.positions.shape[0]


def _resize_bilinear(channels: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resize of an (h, w, c) float array via Pillow's float path."""
    from PIL import Image as PILImage

    planes = []
    for c in range(channels.shape[2]):
        plane = PILImage.fromarray(channels[:, :, c].astype(np.float32), mode="F")
        plane = plane.resize((out_w, out_h), resample=PILImage.Resampling.BILINEAR)
        planes.append(np.asarray(plane, dtype=np.float64))
    return np.stack(planes, axis=2)


def scaled_size(width: int, height: int, target: int = TARGET_LONG_SIDE) -> tuple[int, int]:
    """Uniform-scale (width, height) so the longer side equals `target`."""
    scale = target / max(width, height)
    return max(1, int(math.floor(width * scale + 0.5))), max(1, int(math.floor(height * scale + 0.5)))


def reflect_index(i: np.ndarray, n: int) -> np.ndarray:
    """Mirror coordinate i (may lie outside [0, n)) back into range, no edge repeat."""
    period = 2 * (n - 1)
    j = np.abs(i) % period
    return np.where(j < n, j, period - j)


def _reflect_pad(arr: np.ndarray, pad: int) -> np.ndarray:
    rows = reflect_index(np.arange(-pad, arr.shape[0] + pad), arr.shape[0])
    cols = reflect_index(np.arange(-pad, arr.shape[1] + pad), arr.shape[1])
    return arr[np.ix_(rows, cols)]


def _box_blur_partial(arr: np.ndarray, size: int) -> np.ndarray:
    """Box blur with the window clipped at borders (mean over in-bounds taps).

    Implemented with a summed-area table so large pads stay cheap.
    """
    h, w = arr.shape[:2]
    r = size // 2
    sat = np.zeros((h + 1, w + 1) + arr.shape[2:], dtype=np.float64)
    np.cumsum(np.cumsum(arr, axis=0), axis=1, out=sat[1:, 1:])
    y0 = np.clip(np.arange(h) - r, 0, h)
    y1 = np.clip(np.arange(h) + r + 1, 0, h)
    x0 = np.clip(np.arange(w) - r, 0, w)
    x1 = np.clip(np.arange(w) + r + 1, 0, w)
    counts = (y1 - y0)[:, None] * (x1 - x0)[None, :]
    total = sat[y1[:, None], x1[None, :]] + sat[y0[:, None], x0[None, :]] \
        - sat[y1[:, None], x0[None, :]] - sat[y0[:, None], x1[None, :]]
    if arr.ndim == 3:
        counts = counts[:, :, None]
    return total / counts


def _pad_with_fill(arr: np.ndarray, pad: int) -> np.ndarray:
    """Deterministic stand-in for generative fill: reflect pad, then box-blur
    the padded ring only (interior pixels are untouched)."""
    padded = _reflect_pad(arr, pad)
    blurred = _box_blur_partial(padded, PAD_BLUR_SIZE)
    out = padded.copy()
    ring = np.ones(padded.shape[:2], dtype=bool)
    ring[pad:-pad, pad:-pad] = False
    out[ring] = blurred[ring]
    return out


def preprocess_resize_pad(image: Image) -> Image:
    """Scale the image so max(w, h) == 512, then grow it by 256 px per side.

    The grown border content is the reflect+blur stand-in fill; the interior is
    the plain resized image.  Running the output through this function again
    would scale it back down, so callers preprocess exactly once.
    """
    if image.width < 2 or image.height < 2:
        raise IngestError(
            f"input too small to preprocess: {image.width}x{image.height} (need at least 2x2)"
        )
    out_w, out_h = scaled_size(image.width, image.height)
    data = image.data
    if (out_w, out_h) != (image.width, image.height):
        data = np.clip(_resize_bilinear(data, out_w, out_h), 0.0, 1.0)
    return Image(np.clip(_pad_with_fill(data, PAD_PIXELS), 0.0, 1.0))


def preprocess_depth(depth: DepthMap, image_before: tuple[int, int], image_after: tuple[int, int]) -> DepthMap:
    """Apply the same resize + pad-fill geometry to a depth map.

    `image_before`/`image_after` are the paired image's (w, h) before and after
    preprocessing; the depth map must match the before size.
    """
    if (depth.width, depth.height) != image_before:
        raise IngestError(
            f"depth size {depth.width}x{depth.height} does not match image {image_before[0]}x{image_before[1]}"
        )
    inner_w, inner_h = image_after[0] - 2 * PAD_PIXELS, image_after[1] - 2 * PAD_PIXELS
    data = depth.data
    if (inner_w, inner_h) != (depth.width, depth.height):
        data = _resize_bilinear(data[:, :, None], inner_w, inner_h)[:, :, 0]
    padded = _pad_with_fill(data, PAD_PIXELS)
    return DepthMap(np.maximum(padded, np.min(data) * 1e-6))


def unproject_rgbd(image: Image, depth: DepthMap, base_fovy: float = 60.0) -> ColoredPointCloud:
    """Lift every pixel to a camera-frame 3D point through the pinhole model.

    Depths are first normalized so their median is 1.0 scene unit, which makes
    the default translation search range a ~10%-of-scene-depth move whatever
    the raw depth scale was.  Pixel (u, v) with normalized depth d maps to

        x = (2u/(w-1) - 1) * tan(fovy/2) * (w/h) * d
        y = (1 - 2v/(h-1)) * tan(fovy/2) * d
        z = -d
    """
    if (depth.width, depth.height) != (image.width, image.height):
        raise IngestError(
            f"depth size {depth.width}x{depth.height} does not match image {image.width}x{image.height}"
        )
    if image.width < 2 or image.height < 2:
        raise IngestError("unprojection needs at least a 2x2 image")
    if not 10.0 < base_fovy < 120.0:
        raise IngestError(f"base_fovy must lie in (10, 120) degrees, got {base_fovy}")

    h, w = image.height, image.width
    d = depth.data / np.median(depth.data)
    tan_half = math.tan(math.radians(base_fovy) / 2.0)
    aspect = w / h
    u = np.arange(w, dtype=np.float64)
    v = np.arange(h, dtype=np.float64)
    ndc_x = 2.0 * u / (w - 1) - 1.0
    ndc_y = 1.0 - 2.0 * v / (h - 1)
    x = ndc_x[None, :] * (tan_half * aspect) * d
    y = ndc_y[:, None] * tan_half * d
    positions = np.stack([x.ravel(), y.ravel(), -d.ravel()], axis=1)
    colors = image.data.reshape(-1, 3)
    return ColoredPointCloud(positions, colors)
