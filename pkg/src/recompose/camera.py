"""Camera parameterization: the nine searched degrees of freedom and their
mapping to render transforms and to the optimizer's normalized unit box.

The searched parameters are translation (tx, ty, tz) in scene units, intrinsic
rotations (roll, pitch, yaw) in degrees composed yaw (y axis) -> pitch (x axis)
-> roll (z axis), an additive vertical field-of-view offset in degrees, and
output-size scales (s_w, s_h).  Translation is expressed in the initial
camera's frame, before rotation: the camera placement is T(t) @ R, and scene
points are brought into the moved camera's frame by its inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

PARAM_NAMES = ("tx", "ty", "tz", "roll", "pitch", "yaw", "fovy_offset", "s_w", "s_h")

FOVY_MIN_DEG = 10.0
FOVY_MAX_DEG = 120.0
MIN_OUTPUT_PIXELS = 32


@dataclass(frozen=True)
class CameraParams:
    tx: float = 0.0
    ty: float = 0.0
    tz: float = 0.0
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0
    fovy_offset: float = 0.0
    s_w: float = 1.0
    s_h: float = 1.0

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAM_NAMES], dtype=np.float64)

    @classmethod
    def from_vector(cls, vec) -> "CameraParams":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (9,):
            raise ValueError(f"expected a 9-vector, got shape {vec.shape}")
        return cls(**{n: float(vec[i]) for i, n in enumerate(PARAM_NAMES)})

    def to_dict(self) -> dict:
        return {n: float(getattr(self, n)) for n in PARAM_NAMES}


def identity_params() -> CameraParams:
    """The input view: no movement, no rotation, unit output scales."""
    return CameraParams()


def _default_bound(name: str) -> tuple[float, float]:
    if name in ("tx", "ty"):
        return (-0.1, 0.1)
    if name == "tz":
        return (-0.5, 0.5)
    if name in ("roll", "pitch", "yaw", "fovy_offset"):
        return (-10.0, 10.0)
    return (0.1, 2.0)  # s_w, s_h


@dataclass(frozen=True)
class SearchBounds:
    """Per-parameter (lo, hi) box for the nine dimensions."""

    lo: np.ndarray = field(default_factory=lambda: np.array([_default_bound(n)[0] for n in PARAM_NAMES]))
    hi: np.ndarray = field(default_factory=lambda: np.array([_default_bound(n)[1] for n in PARAM_NAMES]))

    def __post_init__(self):
        lo = np.ascontiguousarray(self.lo, dtype=np.float64)
        hi = np.ascontiguousarray(self.hi, dtype=np.float64)
        if lo.shape != (9,) or hi.shape != (9,):
            raise ValueError("bounds must each have 9 entries")
        if not np.all(lo < hi):
            bad = [PARAM_NAMES[i] for i in np.nonzero(~(lo < hi))[0]]
            raise ValueError(f"lo must be < hi in every dimension, violated for {bad}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def defaults(cls) -> "SearchBounds":
        return cls()

    def bound(self, name: str) -> tuple[float, float]:
        i = PARAM_NAMES.index(name)
        return float(self.lo[i]), float(self.hi[i])

    def contains(self, params: CameraParams, atol: float = 1e-12) -> bool:
        v = params.as_vector()
        return bool(np.all(v >= self.lo - atol) and np.all(v <= self.hi + atol))


def encode(params: CameraParams, bounds: SearchBounds) -> np.ndarray:
    """Map physical parameters to the optimizer's [0, 1]^9 box."""
    v = params.as_vector()
    if not bounds.contains(params):
        raise ValueError(f"parameters out of bounds: {params}")
    return (v - bounds.lo) / (bounds.hi - bounds.lo)


def decode(vec, bounds: SearchBounds) -> CameraParams:
    """Inverse of `encode`; components are clamped to [0, 1] first."""
    x = np.clip(np.asarray(vec, dtype=np.float64), 0.0, 1.0)
    if x.shape != (9,):
        raise ValueError(f"expected a 9-vector, got shape {x.shape}")
    return CameraParams.from_vector(bounds.lo + x * (bounds.hi - bounds.lo))


def rotation_matrix(roll_deg: float, pitch_deg: float, yaw_deg: float) -> np.ndarray:
    """Intrinsic yaw (y axis) -> pitch (x axis) -> roll (z axis) composition."""
    cr, sr = math.cos(math.radians(roll_deg)), math.sin(math.radians(roll_deg))
    cp, sp = math.cos(math.radians(pitch_deg)), math.sin(math.radians(pitch_deg))
    cy, sy = math.cos(math.radians(yaw_deg)), math.sin(math.radians(yaw_deg))
    r_yaw = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    r_pitch = np.array([[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]])
    r_roll = np.array([[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]])
    return r_yaw @ r_pitch @ r_roll


@dataclass(frozen=True)
class RenderSpec:
    """Concrete render request: rigid camera placement, FOV, output size.

    `view` is the camera placement T(t) @ R (camera frame -> scene frame);
    the renderer applies its inverse to bring scene points into the camera
    frame.
    """

    view: np.ndarray  # (4, 4) rigid transform
    fovy_deg: float
    width: int
    height: int

    def __post_init__(self):
        m = np.ascontiguousarray(self.view, dtype=np.float64)
        if m.shape != (4, 4):
            raise ValueError(f"view must be 4x4, got {m.shape}")
        r = m[:3, :3]
        if not (np.allclose(r.T @ r, np.eye(3), atol=1e-9) and abs(np.linalg.det(r) - 1.0) < 1e-9):
            raise ValueError("view rotation block must be orthonormal with det +1")
        if self.width < MIN_OUTPUT_PIXELS or self.height < MIN_OUTPUT_PIXELS:
            raise ValueError(f"output must be at least {MIN_OUTPUT_PIXELS} px per side")
        object.__setattr__(self, "view", m)

    def world_to_camera(self) -> np.ndarray:
        r = self.view[:3, :3]
        t = self.view[:3, 3]
        inv = np.eye(4)
        inv[:3, :3] = r.T
        inv[:3, 3] = -r.T @ t
        return inv


def to_render_spec(params: CameraParams, base_fovy: float, base_w: int, base_h: int) -> RenderSpec:
    """Turn searched parameters into a render request against a base camera."""
    rot = rotation_matrix(params.roll, params.pitch, params.yaw)
    view = np.eye(4)
    view[:3, :3] = rot
    view[:3, 3] = (params.tx, params.ty, params.tz)
    fovy = min(max(base_fovy + params.fovy_offset, FOVY_MIN_DEG), FOVY_MAX_DEG)
    width = max(int(math.floor(params.s_w * base_w + 0.5)), MIN_OUTPUT_PIXELS)
    height = max(int(math.floor(params.s_h * base_h + 0.5)), MIN_OUTPUT_PIXELS)
    return RenderSpec(view=view, fovy_deg=fovy, width=width, height=height)


def fovx_deg(spec: RenderSpec) -> float:
    """Horizontal FOV implied by the vertical FOV and the output aspect."""
    aspect = spec.width / spec.height
    return math.degrees(2.0 * math.atan(math.tan(math.radians(spec.fovy_deg) / 2.0) * aspect))
