"""Deterministic synthetic RGB-D scenes for tests, demos, and the bundled
benchmark fixtures.  Real photo datasets are not redistributed; these scenes
are constructed so the qualitative behavior they probe (subject placement,
coverage holes, aspect preference) is known by design.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .imageio import save_depth_png16, save_image
from .ingest import DepthMap, Image


def _coord_grids(width: int, height: int):
    xs = np.arange(width, dtype=np.float64) / (width - 1)
    ys = np.arange(height, dtype=np.float64) / (height - 1)
    return np.meshgrid(xs, ys)


def disc_scene(width: int = 96, height: int = 72, center: tuple[float, float] = (0.62, 0.42),
               radius: float = 0.12, fg: float = 0.95, bg: float = 0.15,
               depth_slope: float = 0.3) -> tuple[Image, DepthMap]:
    """A bright disc over a dark background, with a mild left-to-right depth ramp.

    `center` is in normalized (x, y) image coordinates.  The disc is the only
    salient structure, so the thirds scorer responds directly to where the
    camera search moves it.
    """
    gx, gy = _coord_grids(width, height)
    inside = (gx - center[0]) ** 2 + (gy - center[1]) ** 2 <= radius * radius
    lum = np.where(inside, fg, bg)
    img = np.stack([lum, lum * 0.92 + 0.04 * inside, lum * 0.85], axis=2)
    depth = 1.0 + depth_slope * gx
    return Image(np.clip(img, 0.0, 1.0)), DepthMap(depth)


def centered_scene(width: int = 96, height: int = 72, **kwargs) -> tuple[Image, DepthMap]:
    """Subject dead-center: the identity view scores poorly on thirds placement."""
    return disc_scene(width, height, center=(0.5, 0.5), **kwargs)


def flat_plane_scene(width: int = 96, height: int = 72, value: float = 0.6) -> tuple[Image, DepthMap]:
    """Uniform color at constant depth 1: any camera move uncovers border pixels."""
    img = np.full((height, width, 3), value)
    img[::8, :, :] *= 0.9  # faint stripes keep the scene non-degenerate for scorers
    return Image(np.clip(img, 0.0, 1.0)), DepthMap(np.ones((height, width)))


def two_subject_scene(width: int = 96, height: int = 72, separation: float = 0.72,
                      radius: float = 0.10) -> tuple[Image, DepthMap]:
    """Two bright discs far apart horizontally on a dark field.

    Framing both discs near thirds points needs a wider output than the base
    aspect, so searches that may stretch s_w outscore searches that cannot.
    """
    gx, gy = _coord_grids(width, height)
    lum = np.full((height, width), 0.1)
    for cx in (0.5 - separation / 2, 0.5 + separation / 2):
        inside = (gx - cx) ** 2 + (gy - 0.5) ** 2 <= radius * radius
        lum = np.where(inside, 0.95, lum)
    img = np.stack([lum, lum, lum * 0.9], axis=2)
    depth = 1.0 + 0.2 * gy
    return Image(np.clip(img, 0.0, 1.0)), DepthMap(depth)


SCENES = {
    "disc": disc_scene,
    "centered": centered_scene,
    "plane": flat_plane_scene,
    "two_subject": two_subject_scene,
}

_BUMP_LOCAL = (0.42, 1.0, 0.08)  # center, height, width: deceptive peak near the start
_BUMP_GLOBAL = (0.78, 3.0, 0.25)


def multimodal_objective(x: np.ndarray) -> float:
    """Bundled 9-D multimodal benchmark: a small bump close to the identity
    encoding and a taller, broader one farther away.  Gradient ascent from the
    center climbs the near bump and stalls; a global search finds the far one.
    """
    x = np.asarray(x, dtype=np.float64)
    total = 0.0
    for center, height, width in (_BUMP_LOCAL, _BUMP_GLOBAL):
        total += height * float(np.exp(-np.sum((x - center) ** 2) / width))
    return total


def write_scene(directory: str | Path, name: str, image: Image, depth: DepthMap,
                depth_scale: float = 1e-3) -> tuple[Path, Path]:
    """Write a scene as `<name>.png` + `<name>.depth.png` (16-bit, scaled)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    img_path = directory / f"{name}.png"
    depth_path = directory / f"{name}.depth.png"
    save_image(image, img_path)
    save_depth_png16(depth, depth_path, scale=depth_scale)
    return img_path, depth_path


def write_fixture_set(directory: str | Path, size: tuple[int, int] = (96, 72),
                      depth_scale: float = 1e-3) -> list[Path]:
    """Write the bundled fixture scenes into a directory; returns image paths."""
    w, h = size
    paths = []
    for name, builder in SCENES.items():
        image, depth = builder(w, h)
        img_path, _ = write_scene(directory, name, image, depth, depth_scale)
        paths.append(img_path)
    return paths
