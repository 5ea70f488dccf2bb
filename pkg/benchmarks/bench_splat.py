"""Benchmark the compiled splat kernel against the pure-numpy fallback.

Usage: python benchmarks/bench_splat.py [--repeats N]

Both kernels must produce identical winner maps; this script asserts that
while timing them on representative workloads (identity-scale render, rotated
view, upscaled output with a wider splat radius).
"""

import argparse
import time

import numpy as np

from recompose import _splat_np
from recompose.camera import CameraParams, identity_params, to_render_spec
from recompose.ingest import unproject_rgbd
from recompose.render import project_points
from recompose import synth

try:
    from recompose import _splat as _splat_ext
except ImportError:
    _splat_ext = None


def kernel_inputs(width, height, params, radius):
    image, depth = synth.disc_scene(width, height)
    cloud = unproject_rgbd(image, depth, 60.0)
    spec = to_render_spec(params, 60.0, width, height)
    u, v, d, visible = project_points(cloud.positions, spec)
    margin = radius + 1.0
    keep = visible & (u > -margin) & (u < spec.width - 1 + margin) \
        & (v > -margin) & (v < spec.height - 1 + margin)
    idx = np.nonzero(keep)[0]
    ix = np.floor(u[idx] + 0.5).astype(np.int32)
    iy = np.floor(v[idx] + 0.5).astype(np.int32)
    return ix, iy, d[idx].astype(np.float32), spec.height, spec.width, radius


def time_kernel(kernel, args, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = kernel.splat_winner(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    opts = parser.parse_args()

    workloads = [
        ("identity 512x384 r0", kernel_inputs(512, 384, identity_params(), 0)),
        ("rotated  512x384 r1", kernel_inputs(512, 384, CameraParams(yaw=8.0, pitch=-4.0, tz=0.2), 1)),
        ("upscaled 512x384 r2", kernel_inputs(512, 384, CameraParams(s_w=1.8, s_h=1.4), 2)),
        ("rotated 1024x768 r1", kernel_inputs(1024, 768, CameraParams(yaw=6.0), 1)),
    ]

    print(f"{'workload':<22}{'points':>9}{'numpy':>12}{'cython':>12}{'speedup':>9}")
    for name, args in workloads:
        t_np, r_np = time_kernel(_splat_np, args, opts.repeats)
        if _splat_ext is None:
            print(f"{name:<22}{len(args[0]):>9}{t_np * 1e3:>10.2f}ms{'n/a':>12}{'n/a':>9}")
            continue
        t_cy, r_cy = time_kernel(_splat_ext, args, opts.repeats)
        assert np.array_equal(r_np, r_cy), f"kernel outputs diverge on {name}"
        print(f"{name:<22}{len(args[0]):>9}{t_np * 1e3:>10.2f}ms{t_cy * 1e3:>10.2f}ms{t_np / t_cy:>8.1f}x")
    if _splat_ext is None:
        print("\ncompiled kernel not built; showing fallback timings only")
    else:
        print("\noutputs verified identical across kernels")


if __name__ == "__main__":
    main()
