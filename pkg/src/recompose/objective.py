"""Search objective: aesthetic score minus a weighted out-of-coverage penalty.

The penalty is the mean squared deviation of the coverage mask from all-ones,
which for binary masks is exactly the uncovered-pixel fraction.  Scorers are
pluggable: two analytic built-ins live here, and an HTTP client lets an
external service (a real neural scorer) take their seat.

External scorer wire protocol (bit-exact): POST <endpoint>/score with the
PNG-encoded image as the body and Content-Type: image/png; the reply must be
a 200 with a JSON body {"score": <finite number>}.  Anything else is a
protocol violation.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from .camera import CameraParams, to_render_spec
from .ingest import ColoredPointCloud, Image
from .render import RenderOutput, default_splat_radius, render

DEFAULT_LAMBDA_MASK = 10.0

LUMA_WEIGHTS = (0.2126, 0.7152, 0.0722)
THIRDS_POINTS = ((1 / 3, 1 / 3), (1 / 3, 2 / 3), (2 / 3, 1 / 3), (2 / 3, 2 / 3))
THIRDS_MAX_DIST = 0.4714  # corner-to-nearest-thirds-point distance, used as the falloff scale
THIRDS_SCORE_SCALE = 3.0


def mask_loss(mask: np.ndarray) -> float:
    """Mean of (1 - mask)^2 over all pixels; the uncovered fraction for binary masks."""
    m = np.asarray(mask, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("mask must be 2-D")
    return float(np.mean((1.0 - m) ** 2))


@dataclass(frozen=True)
class ObjectiveValue:
    score: float
    mask_loss: float
    lambda_mask: float
    total: float

    def __post_init__(self):
        expected = self.score - self.lambda_mask * self.mask_loss
        if not (self.total == expected or (math.isnan(self.total) and math.isnan(expected))):
            raise ValueError("total must equal score - lambda_mask * mask_loss")

    @classmethod
    def of(cls, score: float, mask_loss_value: float, lambda_mask: float) -> "ObjectiveValue":
        return cls(score=score, mask_loss=mask_loss_value, lambda_mask=lambda_mask,
                   total=score - lambda_mask * mask_loss_value)

    def to_dict(self) -> dict:
        return {"score": self.score, "mask_loss": self.mask_loss,
                "lambda_mask": self.lambda_mask, "total": self.total}


@runtime_checkable
class Scorer(Protocol):
    """Aesthetic evaluation contract: higher score = more aesthetic."""

    name: str
    deterministic: bool

    def score(self, image: Image) -> float: ...


class EvaluationError(RuntimeError):
    """An objective evaluation failed (typically a scorer failure)."""


def luminance(image: Image) -> np.ndarray:
    r, g, b = LUMA_WEIGHTS
    d = image.data
    return r * d[:, :, 0] + g * d[:, :, 1] + b * d[:, :, 2]


def thirds_components(image: Image) -> dict:
    """Intermediate terms of the built-in scorer, exposed for instrumentation."""
    lum = luminance(image)
    h, w = lum.shape
    saliency = np.abs(lum - lum.mean())
    total = saliency.sum()
    if total < 1e-9:
        return {"degenerate": True, "thirds_term": 0.0, "contrast_term": 0.0,
                "centroid": None, "thirds_distance": None, "score": 0.0}
    xs = np.arange(w, dtype=np.float64) / (w - 1) if w > 1 else np.full(w, 0.5)
    ys = np.arange(h, dtype=np.float64) / (h - 1) if h > 1 else np.full(h, 0.5)
    cx = float((saliency.sum(axis=0) * xs).sum() / total)
    cy = float((saliency.sum(axis=1) * ys).sum() / total)
    dist = min(math.hypot(cx - px, cy - py) for px, py in THIRDS_POINTS)
    thirds_term = 1.0 - min(dist / THIRDS_MAX_DIST, 1.0)
    contrast_term = min(float(lum.std()) / 0.5, 1.0)
    score = THIRDS_SCORE_SCALE * (0.7 * thirds_term + 0.3 * contrast_term)
    return {"degenerate": False, "thirds_term": thirds_term, "contrast_term": contrast_term,
            "centroid": (cx, cy), "thirds_distance": dist, "score": score}


def score_thirds_contrast(image: Image) -> float:
    """Analytic composition score in [0, 3]: saliency-centroid proximity to the
    rule-of-thirds points (70%) plus luminance contrast (30%)."""
    return thirds_components(image)["score"]


class ThirdsScorer:
    name = "thirds"
    deterministic = True

    def score(self, image: Image) -> float:
        return score_thirds_contrast(image)


class ConstantScorer:
    deterministic = True

    def __init__(self, value: float):
        self.value = float(value)
        self.name = f"constant:{self.value:g}"

    def score(self, image: Image) -> float:
        return self.value


class MeanLuminanceScorer:
    name = "mean_luminance"
    deterministic = True

    def score(self, image: Image) -> float:
        return float(luminance(image).mean())


class ScorerError(RuntimeError):
    """Base class for external scorer failures; message carries diagnostics."""


class ScorerTimeout(ScorerError):
    pass


class ScorerConnectionError(ScorerError):
    pass


class ScorerHTTPError(ScorerError):
    def __init__(self, message: str, status: int):
        super().__init__(message)
        self.status = status


class ScorerProtocolError(ScorerError):
    pass


def encode_png(image: Image) -> bytes:
    from PIL import Image as PILImage

    buf = io.BytesIO()
    PILImage.fromarray(image.to_uint8(), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def external_score(image: Image, endpoint: str, timeout_s: float = 30.0) -> float:
    """POST the image to an external scorer service and return its score."""
    import requests

    url = endpoint.rstrip("/") + "/score"
    try:
        resp = requests.post(url, data=encode_png(image),
                             headers={"Content-Type": "image/png"}, timeout=timeout_s)
    except requests.Timeout as exc:
        raise ScorerTimeout(f"scorer at {url} timed out after {timeout_s}s") from exc
    except requests.ConnectionError as exc:
        raise ScorerConnectionError(f"scorer at {url} unreachable: {exc}") from exc
    if resp.status_code != 200:
        raise ScorerHTTPError(f"scorer at {url} returned HTTP {resp.status_code}: {resp.text[:200]}",
                              status=resp.status_code)
    try:
        body = json.loads(resp.content)
    except (ValueError, UnicodeDecodeError) as exc:
        raise ScorerProtocolError(f"scorer at {url} sent a non-JSON body: {exc}") from exc
    if not isinstance(body, dict) or "score" not in body:
        raise ScorerProtocolError(f"scorer reply missing 'score' field: {body!r}")
    value = body["score"]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ScorerProtocolError(f"scorer 'score' is not a finite number: {value!r}")
    return float(value)


class ExternalScorer:
    deterministic = False

    def __init__(self, endpoint: str, timeout_s: float = 30.0):
        self.endpoint = endpoint
        self.timeout_s = timeout_s
        self.name = f"external:{endpoint}"

    def score(self, image: Image) -> float:
        return external_score(image, self.endpoint, self.timeout_s)


def make_scorer(selector: str, external_timeout_s: float = 30.0) -> Scorer:
    """Build a scorer from a config selector: 'thirds', 'mean_luminance',
    'constant:<value>', or 'external:<endpoint-url>'."""
    if selector == "thirds":
        return ThirdsScorer()
    if selector == "mean_luminance":
        return MeanLuminanceScorer()
    if selector.startswith("constant:"):
        return ConstantScorer(float(selector.split(":", 1)[1]))
    if selector.startswith("external:"):
        return ExternalScorer(selector.split(":", 1)[1], timeout_s=external_timeout_s)
    raise ValueError(f"unknown scorer selector {selector!r}")


@dataclass(frozen=True)
class BaseCamera:
    """Fixed capture camera the searched parameters are relative to."""

    fovy_deg: float
    width: int
    height: int
    source_width: int | None = None  # unprojected image width; defaults to `width`
    splat_radius: int | None = None  # None = radius policy in render.default_splat_radius

    def radius_for(self, output_w: int) -> int:
        if self.splat_radius is not None:
            return self.splat_radius
        return default_splat_radius(output_w, self.source_width or self.width)


def evaluate_with_render(cloud: ColoredPointCloud, params: CameraParams, base: BaseCamera,
                         scorer: Scorer, lambda_mask: float = DEFAULT_LAMBDA_MASK
                         ) -> tuple[ObjectiveValue, RenderOutput]:
    """Render once, score and penalize the same output."""
    spec = to_render_spec(params, base.fovy_deg, base.width, base.height)
    out = render(cloud, spec, splat_radius=base.radius_for(spec.width))
    try:
        score = scorer.score(out.color)
    except ScorerError as exc:
        raise EvaluationError(f"scorer {scorer.name!r} failed: {exc}") from exc
    if not math.isfinite(score):
        raise EvaluationError(f"scorer {scorer.name!r} returned a non-finite score {score!r}")
    return ObjectiveValue.of(score, mask_loss(out.mask), lambda_mask), out


def evaluate(cloud: ColoredPointCloud, params: CameraParams, base: BaseCamera,
             scorer: Scorer, lambda_mask: float = DEFAULT_LAMBDA_MASK) -> ObjectiveValue:
    return evaluate_with_render(cloud, params, base, scorer, lambda_mask)[0]
