"""End-to-end orchestration: config handling, the preprocess -> reconstruct ->
optimize -> render loop, batch evaluation, and ablation reports.

Configuration is a flat text file of dotted keys (`key = value`, JSON-style
values, `#` comments).  Every key has a matching CLI flag of the same name.
Wall-clock timings are written to a separate `timings.csv` sidecar and kept
out of the canonical reports so reports stay byte-identical across reruns of
the same seed and config.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .camera import PARAM_NAMES, CameraParams, SearchBounds, identity_params
from .imageio import load_depth, load_image, save_image, save_mask
from .ingest import ColoredPointCloud, Image, IngestError, preprocess_depth, preprocess_resize_pad, unproject_rgbd
from .objective import BaseCamera, ObjectiveValue, evaluate, evaluate_with_render, make_scorer
from .optimizer import OptimizationTrace, StopRule, cma_optimize, local_ascent_baseline
from .plyio import PlyError, load_ply


class PipelineError(RuntimeError):
    """Configuration or orchestration failure surfaced to the operator."""


@dataclass(frozen=True)
class ConfigField:
    key: str
    kind: str  # float | int | bool | str
    default: object
    help: str


def _bounds_fields() -> list[ConfigField]:
    from .camera import _default_bound

    fields = []
    for name in PARAM_NAMES:
        lo, hi = _default_bound(name)
        fields.append(ConfigField(f"bounds.{name}.lo", "float", lo, f"search lower bound for {name}"))
        fields.append(ConfigField(f"bounds.{name}.hi", "float", hi, f"search upper bound for {name}"))
    return fields


CONFIG_SCHEMA: list[ConfigField] = [
    ConfigField("input.image", "str", "", "path to the RGB PNG input"),
    ConfigField("input.depth", "str", "", "path to the paired depth map (.png 16-bit or .f32 raw)"),
    ConfigField("input.ply", "str", "", "path to a PLY point cloud (alternative to image+depth)"),
    ConfigField("input.depth_scale", "float", 1.0, "multiplier applied to stored depth values"),
    ConfigField("preprocess.enabled", "bool", True, "resize to 512 long side and pad 256 px per side"),
    ConfigField("camera.base_fovy", "float", 60.0, "vertical field of view of the capture camera, degrees"),
    ConfigField("camera.base_width", "int", 512, "base output width for PLY scenes (RGB-D scenes use the image)"),
    ConfigField("camera.base_height", "int", 512, "base output height for PLY scenes"),
    *_bounds_fields(),
    ConfigField("objective.lambda_mask", "float", 10.0, "weight of the uncovered-area penalty"),
    ConfigField("objective.scorer", "str", "thirds",
                "scorer: thirds | mean_luminance | constant:<v> | external:<url>"),
    ConfigField("objective.external_timeout_s", "float", 30.0, "HTTP timeout for external scorers"),
    ConfigField("stop.max_evaluations", "int", 2000, "objective evaluation budget"),
    ConfigField("stop.window", "int", 500, "early-stop lookback, in evaluations"),
    ConfigField("stop.min_improvement", "float", 0.001, "early-stop minimum best-so-far improvement"),
    ConfigField("optimizer.method", "str", "cma", "cma | cma_no_scaling | local_ascent"),
    ConfigField("optimizer.seed", "int", 0, "random seed"),
    ConfigField("optimizer.sigma0", "float", 0.25, "initial CMA-ES step size in normalized space"),
    ConfigField("optimizer.downscale", "int", 1, "render-resolution divisor during the search"),
    ConfigField("render.splat_radius", "int", -1, "splat radius in pixels, -1 = automatic"),
    ConfigField("output.dir", "str", "out", "artifact directory"),
    ConfigField("output.save_cloud", "bool", False, "also write the reconstructed point cloud as scene.ply"),
    ConfigField("batch.workers", "int", 1, "parallel scenes in batch mode"),
]

_SCHEMA_BY_KEY = {f.key: f for f in CONFIG_SCHEMA}


def _coerce(field: ConfigField, value):
    try:
        if field.kind == "float":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError
            return float(value)
        if field.kind == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError
            return int(value)
        if field.kind == "bool":
            if not isinstance(value, bool):
                raise TypeError
            return value
        return str(value)
    except TypeError:
        raise PipelineError(f"config key {field.key!r} expects {field.kind}, got {value!r}") from None


class PipelineConfig:
    """Flat dotted-key configuration with schema-checked values."""

    def __init__(self):
        self.values = {f.key: f.default for f in CONFIG_SCHEMA}

    @classmethod
    def defaults(cls) -> "PipelineConfig":
        return cls()

    def set(self, key: str, value) -> None:
        field = _SCHEMA_BY_KEY.get(key)
        if field is None:
            raise PipelineError(f"unknown config key {key!r}")
        if isinstance(value, str) and field.kind != "str":
            try:
                value = json.loads(value)
            except ValueError:
                raise PipelineError(f"cannot parse value {value!r} for key {key!r}") from None
        self.values[key] = _coerce(field, value)

    def get(self, key: str):
        if key not in self.values:
            raise PipelineError(f"unknown config key {key!r}")
        return self.values[key]

    def copy(self) -> "PipelineConfig":
        dup = PipelineConfig()
        dup.values = dict(self.values)
        return dup

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        cfg = cls()
        cfg.update_from_file(path)
        return cfg

    def update_from_file(self, path) -> None:
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise PipelineError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            self.set(key, value)

    def to_text(self) -> str:
        lines = ["# recompose pipeline configuration", ""]
        for field in CONFIG_SCHEMA:
            value = self.values[field.key]
            rendered = json.dumps(value) if field.kind != "str" else str(value)
            lines.append(f"{field.key} = {rendered}  # {field.help}")
        return "\n".join(lines) + "\n"

    # typed views -----------------------------------------------------------

    def bounds(self) -> SearchBounds:
        lo = np.array([self.get(f"bounds.{n}.lo") for n in PARAM_NAMES])
        hi = np.array([self.get(f"bounds.{n}.hi") for n in PARAM_NAMES])
        return SearchBounds(lo=lo, hi=hi)

    def stop_rule(self) -> StopRule:
        return StopRule(max_evaluations=self.get("stop.max_evaluations"),
                        window=self.get("stop.window"),
                        min_improvement=self.get("stop.min_improvement"))

    def scorer(self):
        return make_scorer(self.get("objective.scorer"), self.get("objective.external_timeout_s"))


def default_config_text() -> str:
    return PipelineConfig.defaults().to_text()


@dataclass
class SceneBundle:
    name: str
    cloud: ColoredPointCloud
    base_width: int
    base_height: int
    source_image: Image | None  # None for PLY scenes


def load_scene(cfg: PipelineConfig) -> SceneBundle:
    image_path = cfg.get("input.image")
    depth_path = cfg.get("input.depth")
    ply_path = cfg.get("input.ply")
    has_rgbd = bool(image_path) or bool(depth_path)
    if bool(ply_path) == has_rgbd:
        raise PipelineError("exactly one scene source required: input.image + input.depth, or input.ply")

    if ply_path:
        try:
            cloud = load_ply(ply_path)
        except (OSError, PlyError) as exc:
            raise PipelineError(f"cannot load point cloud {ply_path}: {exc}") from exc
        return SceneBundle(name=Path(ply_path).stem, cloud=cloud,
                           base_width=cfg.get("camera.base_width"),
                           base_height=cfg.get("camera.base_height"), source_image=None)

    if not (image_path and depth_path):
        raise PipelineError("RGB-D input needs both input.image and input.depth")
    try:
        image = load_image(image_path)
        depth = load_depth(depth_path, scale=cfg.get("input.depth_scale"))
    except (OSError, IngestError) as exc:
        raise PipelineError(f"cannot load inputs: {exc}") from exc

    try:
        if cfg.get("preprocess.enabled"):
            before = (image.width, image.height)
            image_pp = preprocess_resize_pad(image)
            depth_pp = preprocess_depth(depth, before, (image_pp.width, image_pp.height))
        else:
            image_pp, depth_pp = image, depth
        cloud = unproject_rgbd(image_pp, depth_pp, cfg.get("camera.base_fovy"))
    except IngestError as exc:
        raise PipelineError(f"cannot build scene from {image_path}: {exc}") from exc
    return SceneBundle(name=Path(image_path).stem, cloud=cloud,
                       base_width=image_pp.width, base_height=image_pp.height, source_image=image_pp)


def _base_camera(cfg: PipelineConfig, scene: SceneBundle, downscaled: bool) -> BaseCamera:
    radius = cfg.get("render.splat_radius")
    width, height = scene.base_width, scene.base_height
    if downscaled:
        ds = max(1, cfg.get("optimizer.downscale"))
        width = max(32, int(math.floor(width / ds + 0.5)))
        height = max(32, int(math.floor(height / ds + 0.5)))
    return BaseCamera(fovy_deg=cfg.get("camera.base_fovy"), width=width, height=height,
                      source_width=scene.base_width,
                      splat_radius=None if radius < 0 else radius)


def make_objective(cfg: PipelineConfig, scene: SceneBundle, scorer=None):
    """Objective over the normalized parameter box, rendering at search resolution."""
    scorer = scorer or cfg.scorer()
    base = _base_camera(cfg, scene, downscaled=True)
    bounds = cfg.bounds()
    lam = cfg.get("objective.lambda_mask")

    def objective(x: np.ndarray) -> ObjectiveValue:
        from .camera import decode

        return evaluate(scene.cloud, decode(x, bounds), base, scorer, lam)

    return objective


METHOD_ORDER = ("input", "local_ascent", "cma_no_scaling", "cma")


def run_method(cfg: PipelineConfig, scene: SceneBundle, method: str, scorer=None
               ) -> tuple[CameraParams, OptimizationTrace]:
    scorer = scorer or cfg.scorer()
    objective = make_objective(cfg, scene, scorer)
    bounds, stop, seed = cfg.bounds(), cfg.stop_rule(), cfg.get("optimizer.seed")
    sigma0 = cfg.get("optimizer.sigma0")
    if method == "cma":
        return cma_optimize(objective, bounds, stop, seed, sigma0=sigma0)
    if method == "cma_no_scaling":
        return cma_optimize(objective, bounds, stop, seed, sigma0=sigma0,
                            frozen={"s_w": 1.0, "s_h": 1.0})
    if method == "local_ascent":
        return local_ascent_baseline(objective, bounds, stop, seed)
    raise PipelineError(f"unknown optimizer.method {method!r} (expected cma | cma_no_scaling | local_ascent)")


def run_single(cfg: PipelineConfig, out_dir: str | Path | None = None) -> dict:
    """Full single-image loop; writes artifacts and returns the summary dict."""
    started = time.perf_counter()
    out = Path(out_dir if out_dir is not None else cfg.get("output.dir"))
    out.mkdir(parents=True, exist_ok=True)

    scene = load_scene(cfg)
    scorer = cfg.scorer()
    base_full = _base_camera(cfg, scene, downscaled=False)
    lam = cfg.get("objective.lambda_mask")

    input_value = evaluate(scene.cloud, identity_params(), base_full, scorer, lam)
    best_params, trace = run_method(cfg, scene, cfg.get("optimizer.method"), scorer)
    best_value_full, best_render = evaluate_with_render(scene.cloud, best_params, base_full, scorer, lam)

    save_image(best_render.color, out / "optimized.png")
    save_mask(best_render.mask, out / "mask.png")
    (out / "best_params.json").write_text(json.dumps(best_params.to_dict(), indent=2) + "\n")
    trace.write_jsonl(out / "trace.jsonl")
    if cfg.get("output.save_cloud"):
        from .plyio import save_ply

        save_ply(scene.cloud, out / "scene.ply")

    summary = {
        "scene": {"name": scene.name, "points": scene.cloud.count,
                  "base_width": scene.base_width, "base_height": scene.base_height},
        "method": cfg.get("optimizer.method"),
        "seed": cfg.get("optimizer.seed"),
        "input": input_value.to_dict(),
        "search": trace.summary(),
        "optimized": best_value_full.to_dict(),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    _write_timing(out / "timings.csv", [(scene.name, time.perf_counter() - started)])
    return summary


def _write_timing(path: Path, rows: list[tuple[str, float]]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "wall_time_s"])
        for name, seconds in rows:
            writer.writerow([name, f"{seconds:.3f}"])


def discover_scenes(directory: str | Path) -> list[dict]:
    """Pair `X.png` with `X.depth.png`/`X.depth.f32`; standalone `X.ply` is a scene."""
    directory = Path(directory)
    if not directory.is_dir():
        raise PipelineError(f"not a directory: {directory}")
    scenes = []
    for img in sorted(directory.glob("*.png")):
        if img.name.endswith(".depth.png"):
            continue
        stem = img.name[: -len(".png")]
        depth = None
        for candidate in (directory / f"{stem}.depth.png", directory / f"{stem}.depth.f32"):
            if candidate.exists():
                depth = candidate
                break
        if depth is not None:
            scenes.append({"name": stem, "image": str(img), "depth": str(depth)})
    for ply in sorted(directory.glob("*.ply")):
        scenes.append({"name": ply.stem, "ply": str(ply)})
    if not scenes:
        raise PipelineError(f"no scenes found in {directory} (need X.png + X.depth.png/.f32, or X.ply)")
    return sorted(scenes, key=lambda s: s["name"])


def _configure_scene(cfg: PipelineConfig, scene_entry: dict) -> PipelineConfig:
    scene_cfg = cfg.copy()
    scene_cfg.set("input.image", scene_entry.get("image", ""))
    scene_cfg.set("input.depth", scene_entry.get("depth", ""))
    scene_cfg.set("input.ply", scene_entry.get("ply", ""))
    return scene_cfg


def _batch_worker(args: tuple) -> dict:
    values, scene_entry, scene_out = args
    cfg = PipelineConfig()
    cfg.values = values
    started = time.perf_counter()
    try:
        summary = run_single(_configure_scene(cfg, scene_entry), scene_out)
        return {"name": scene_entry["name"], "ok": True, "summary": summary,
                "seconds": time.perf_counter() - started}
    except (PipelineError, IngestError, PlyError, OSError) as exc:
        return {"name": scene_entry["name"], "ok": False,
                "error": {"type": type(exc).__name__, "message": str(exc)},
                "seconds": time.perf_counter() - started}


_ROW_FIELDS = ("input_score", "input_mask_loss", "input_total",
               "optimized_score", "optimized_mask_loss", "optimized_total",
               "evaluations")


def _row_from_summary(name: str, summary: dict) -> dict:
    return {
        "name": name,
        "input_score": summary["input"]["score"],
        "input_mask_loss": summary["input"]["mask_loss"],
        "input_total": summary["input"]["total"],
        "optimized_score": summary["optimized"]["score"],
        "optimized_mask_loss": summary["optimized"]["mask_loss"],
        "optimized_total": summary["optimized"]["total"],
        "evaluations": summary["search"]["evaluations"],
        "termination": summary["search"]["termination"],
    }


def run_batch(cfg: PipelineConfig, directory: str | Path, out_dir: str | Path | None = None) -> dict:
    """Run every scene in a directory; returns the report dict (also written)."""
    out = Path(out_dir if out_dir is not None else cfg.get("output.dir"))
    out.mkdir(parents=True, exist_ok=True)
    scenes = discover_scenes(directory)
    tasks = [(dict(cfg.values), entry, str(out / entry["name"])) for entry in scenes]

    workers = max(1, cfg.get("batch.workers"))
    if workers == 1:
        results = [_batch_worker(task) for task in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_batch_worker, tasks))
    results.sort(key=lambda r: r["name"])

    rows = [_row_from_summary(r["name"], r["summary"]) for r in results if r["ok"]]
    failures = [{"name": r["name"], "error": r["error"]} for r in results if not r["ok"]]
    aggregate = {f: (sum(row[f] for row in rows) / len(rows) if rows else None) for f in _ROW_FIELDS}
    report = {"directory": str(directory), "rows": rows, "failures": failures, "aggregate": aggregate}

    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    with (out / "report.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["name", *_ROW_FIELDS, "termination"])
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    _write_timing(out / "timings.csv", [(r["name"], r["seconds"]) for r in results])
    return report


def run_ablation(cfg: PipelineConfig, target: str | Path, out_dir: str | Path | None = None) -> dict:
    """Reproduce the ablation layout: methods x scene groups, mean best totals.

    `target` is a directory; its immediate subdirectories are the groups, or
    the directory itself forms a single group when it has no subdirectories.
    """
    target = Path(target)
    out = Path(out_dir if out_dir is not None else cfg.get("output.dir"))
    out.mkdir(parents=True, exist_ok=True)
    subdirs = sorted(d for d in target.iterdir() if d.is_dir()) if target.is_dir() else []
    groups = {d.name: d for d in subdirs} if subdirs else {target.name: target}

    table: dict[str, dict[str, float]] = {method: {} for method in METHOD_ORDER}
    details: dict[str, dict] = {}
    for group_name, group_dir in groups.items():
        totals = {method: [] for method in METHOD_ORDER}
        for entry in discover_scenes(group_dir):
            scene_cfg = _configure_scene(cfg, entry)
            scene = load_scene(scene_cfg)
            scorer = scene_cfg.scorer()
            base_opt = _base_camera(scene_cfg, scene, downscaled=True)
            lam = scene_cfg.get("objective.lambda_mask")
            input_value = evaluate(scene.cloud, identity_params(), base_opt, scorer, lam)
            totals["input"].append(input_value.total)
            scene_out = out / group_name / entry["name"]
            scene_out.mkdir(parents=True, exist_ok=True)
            for method in METHOD_ORDER[1:]:
                _, trace = run_method(scene_cfg, scene, method, scorer)
                totals[method].append(trace.best_total)
                trace.write_jsonl(scene_out / f"trace_{method}.jsonl")
                trace.write_summary(scene_out / f"summary_{method}.json")
            details[f"{group_name}/{entry['name']}"] = {m: totals[m][-1] for m in METHOD_ORDER}
        for method in METHOD_ORDER:
            table[method][group_name] = sum(totals[method]) / len(totals[method])

    group_names = list(groups)
    emit_ablation_report(table, group_names, out / "ablation.csv", out / "ablation.txt")
    report = {"groups": group_names, "table": table, "per_scene": details}
    (out / "ablation.json").write_text(json.dumps(report, indent=2) + "\n")
    return report


def emit_ablation_report(table: dict, group_names: list[str], csv_path: Path, txt_path: Path) -> None:
    """Write the method x group mean-total table as CSV and aligned text."""
    with Path(csv_path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", *group_names])
        for method in METHOD_ORDER:
            writer.writerow([method, *(repr(table[method][g]) for g in group_names)])

    buf = io.StringIO()
    name_w = max(len(m) for m in METHOD_ORDER)
    col_w = max(12, *(len(g) for g in group_names)) + 2
    buf.write("method".ljust(name_w) + "".join(g.rjust(col_w) for g in group_names) + "\n")
    for method in METHOD_ORDER:
        cells = "".join(f"{table[method][g]:.6f}".rjust(col_w) for g in group_names)
        buf.write(method.ljust(name_w) + cells + "\n")
    Path(txt_path).write_text(buf.getvalue())


def render_at_params(cfg: PipelineConfig, params_path: str | Path, out_dir: str | Path | None = None) -> dict:
    """Render the configured scene at previously saved parameters, no search."""
    out = Path(out_dir if out_dir is not None else cfg.get("output.dir"))
    out.mkdir(parents=True, exist_ok=True)
    payload = json.loads(Path(params_path).read_text())
    try:
        params = CameraParams(**{n: float(payload[n]) for n in PARAM_NAMES})
    except (KeyError, TypeError, ValueError) as exc:
        raise PipelineError(f"bad params file {params_path}: {exc}") from exc
    scene = load_scene(cfg)
    scorer = cfg.scorer()
    base = _base_camera(cfg, scene, downscaled=False)
    value, rendered = evaluate_with_render(scene.cloud, params, base, scorer,
                                           cfg.get("objective.lambda_mask"))
    save_image(rendered.color, out / "render.png")
    save_mask(rendered.mask, out / "render_mask.png")
    result = {"params": params.to_dict(), "value": value.to_dict(),
              "width": rendered.color.width, "height": rendered.color.height}
    (out / "render.json").write_text(json.dumps(result, indent=2) + "\n")
    return result
