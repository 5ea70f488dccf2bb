"""Deterministic z-buffered point splatting.

Each cloud point is projected through the pinhole model of the render spec and
stamped as a filled disc of fixed pixel radius; the nearest point wins each
pixel, with depth ties broken by the lowest point index.  Pixels no splat
touches stay background black and are reported as holes in the coverage mask.

The inner rasterization loop is the package's hot kernel.  A compiled Cython
kernel is used when it was built at install time; otherwise a pure-numpy
kernel with identical output is selected.  Set RECOMPOSE_FORCE_NUMPY=1 to
force the fallback (used by the tests and the kernel benchmark).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import _splat_np
from .camera import RenderSpec
from .ingest import ColoredPointCloud, Image

try:
    from . import _splat as _splat_ext
except ImportError:
    _splat_ext = None

NEAR_PLANE_Z = -1e-4


def active_kernel_name() -> str:
    if os.environ.get("RECOMPOSE_FORCE_NUMPY") == "1" or _splat_ext is None:
        return "numpy"
    return "cython"


def _kernel():
    return _splat_np if active_kernel_name() == "numpy" else _splat_ext


@dataclass(frozen=True)
class RenderOutput:
    """Color image plus {0,1} coverage mask of identical dimensions."""

    color: Image
    mask: np.ndarray  # (h, w) uint8

    def __post_init__(self):
        if self.mask.shape != self.color.data.shape[:2]:
            raise ValueError("mask dimensions must match the color image")


def default_splat_radius(output_w: int, source_w: int) -> int:
    """Radius policy: 0 when output and source widths match (exact identity
    renders), otherwise ceil(output/source) so upscaled outputs stay hole-free."""
    if output_w == source_w:
        return 0
    return int(math.ceil(output_w / source_w))


def project_points(positions: np.ndarray, spec: RenderSpec):
    """Camera-frame depths and continuous pixel coordinates for every point.

    Returns (u, v, depth, visible); depth is distance along -z, and points at
    or behind the near plane are flagged not visible.
    """
    w2c = spec.world_to_camera()
    cam = positions @ w2c[:3, :3].T + w2c[:3, 3]
    z = cam[:, 2]
    visible = z < NEAR_PLANE_Z
    depth = -z
    safe = np.where(visible, depth, 1.0)
    tan_half = math.tan(math.radians(spec.fovy_deg) / 2.0)
    aspect = spec.width / spec.height
    ndc_x = cam[:, 0] / (safe * tan_half * aspect)
    ndc_y = cam[:, 1] / (safe * tan_half)
    u = (ndc_x + 1.0) * (spec.width - 1) / 2.0
    v = (1.0 - ndc_y) * (spec.height - 1) / 2.0
    return u, v, depth, visible


def render(cloud: ColoredPointCloud, spec: RenderSpec, splat_radius: int = 0) -> RenderOutput:
    if splat_radius < 0:
        raise ValueError("splat_radius must be a non-negative integer")
    h, w, r = spec.height, spec.width, int(splat_radius)
    u, v, depth, visible = project_points(cloud.positions, spec)

    # Keep points whose splat disc can touch the image; bound before the int
    # cast so near-plane blowups cannot overflow.
    margin = r + 1.0
    keep = visible & (u > -margin) & (u < w - 1 + margin) & (v > -margin) & (v < h - 1 + margin)
    idx = np.nonzero(keep)[0]

    ix = np.floor(u[idx] + 0.5).astype(np.int32)
    iy = np.floor(v[idx] + 0.5).astype(np.int32)
    d32 = depth[idx].astype(np.float32)
    winner = _kernel().splat_winner(ix, iy, d32, h, w, r)

    covered = winner >= 0
    color = np.zeros((h, w, 3), dtype=np.float64)
    if idx.size:
        color[covered] = cloud.colors[idx[winner[covered]]]
    mask = covered.astype(np.uint8)
    return RenderOutput(color=Image(color), mask=mask)


def coverage_fraction(mask: np.ndarray) -> float:
    """Fraction of mask pixels equal to 1."""
    m = np.asarray(mask)
    if m.ndim != 2 or not np.isin(m, (0, 1)).all():
        raise ValueError("mask must be a 2-D array of {0,1}")
    return float(m.mean())
