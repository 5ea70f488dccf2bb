"""recompose: improve photo composition by re-shooting a reconstructed 3D scene.

An RGB-D input (or a PLY point cloud) is turned into a colored point cloud,
rendered through a z-buffered point splatter, scored by a pluggable aesthetic
scorer, and the nine camera degrees of freedom (translation, rotation,
field-of-view offset, output scaling) are searched with CMA-ES under a
coverage penalty that suppresses views exposing unphotographed regions.
"""

__version__ = "0.1.0"

from .camera import CameraParams, RenderSpec, SearchBounds, decode, encode, to_render_spec
from .ingest import ColoredPointCloud, DepthMap, Image, preprocess_resize_pad, unproject_rgbd
from .objective import ObjectiveValue, evaluate, mask_loss, score_thirds_contrast
from .optimizer import OptimizationTrace, StopRule, cma_optimize, local_ascent_baseline
from .render import RenderOutput, coverage_fraction, render

__all__ = [
    "CameraParams",
    "ColoredPointCloud",
    "DepthMap",
    "Image",
    "ObjectiveValue",
    "OptimizationTrace",
    "RenderOutput",
    "RenderSpec",
    "SearchBounds",
    "StopRule",
    "cma_optimize",
    "coverage_fraction",
    "decode",
    "encode",
    "evaluate",
    "local_ascent_baseline",
    "mask_loss",
    "preprocess_resize_pad",
    "render",
    "score_thirds_contrast",
    "to_render_spec",
    "unproject_rgbd",
]
