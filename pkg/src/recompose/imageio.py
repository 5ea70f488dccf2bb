"""File I/O for images, depth maps, and masks.

Depth is accepted either as 16-bit grayscale PNG (values multiplied by a
configurable scale factor, larger = farther) or as a raw little-endian float32
dump preceded by two u32 dimensions (width, height), row-major.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .ingest import DepthMap, Image, IngestError


def load_image(path: str | Path) -> Image:
    with PILImage.open(path) as img:
        rgb = img.convert("RGB")
        return Image.from_uint8(np.asarray(rgb, dtype=np.uint8))


def save_image(image: Image, path: str | Path) -> None:
    PILImage.fromarray(image.to_uint8(), mode="RGB").save(path, format="PNG")


def save_mask(mask: np.ndarray, path: str | Path) -> None:
    """Write a {0,1} mask as a 1-bit PNG."""
    PILImage.fromarray(np.asarray(mask, dtype=bool)).save(path, format="PNG", bits=1)


def load_depth(path: str | Path, scale: float = 1.0) -> DepthMap:
    """Load a depth map; format chosen by extension (.png or .f32)."""
    path = Path(path)
    if path.suffix.lower() == ".f32":
        return _load_depth_f32(path, scale)
    return _load_depth_png(path, scale)


def _load_depth_png(path: Path, scale: float) -> DepthMap:
    with PILImage.open(path) as img:
        if img.mode not in ("I", "I;16", "I;16B", "L"):
            raise IngestError(f"depth PNG must be single-channel grayscale, got mode {img.mode!r}")
        arr = np.asarray(img.convert("I"), dtype=np.float64)
    return DepthMap(arr * scale)


def _load_depth_f32(path: Path, scale: float) -> DepthMap:
    raw = path.read_bytes()
    if len(raw) < 8:
        raise IngestError(f"truncated depth file {path} (missing dimension header)")
    w, h = struct.unpack("<II", raw[:8])
    expected = 8 + 4 * w * h
    if len(raw) != expected:
        raise IngestError(f"depth file {path} has {len(raw)} bytes, expected {expected} for {w}x{h}")
    data = np.frombuffer(raw, dtype="<f4", offset=8).reshape(h, w).astype(np.float64)
    return DepthMap(data * scale)


def save_depth_f32(depth: DepthMap, path: str | Path) -> None:
    payload = struct.pack("<II", depth.width, depth.height)
    payload += depth.data.astype("<f4").tobytes()
    Path(path).write_bytes(payload)


def save_depth_png16(depth: DepthMap, path: str | Path, scale: float = 1.0) -> None:
    """Write depth as 16-bit grayscale PNG; stored value = depth / scale."""
    values = np.floor(depth.data / scale + 0.5)
    if values.max() > 65535 or values.min() < 0:
        raise IngestError("depth values out of 16-bit range at this scale")
    PILImage.fromarray(values.astype(np.uint16)).save(path, format="PNG")
