# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled splat rasterization kernel.

Per-pixel winner is the point minimizing (float32 depth, point index)
lexicographically; iterating points in ascending index with a strict
depth comparison realizes the index tie-break.  Must stay bit-identical
to the pure-numpy kernel in _splat_np.py.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def splat_winner(int[::1] ix, int[::1] iy, float[::1] depth,
                 int height, int width, int radius):
    """Return per-pixel winning point index (int64, -1 where no splat lands)."""
    cdef Py_ssize_t n = ix.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=2] winner_arr = np.full((height, width), -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.float32_t, ndim=2] zbuf_arr = np.full((height, width), np.inf, dtype=np.float32)
    cdef long long[:, ::1] winner = winner_arr
    cdef float[:, ::1] zbuf = zbuf_arr

    # Per-row half-widths of the splat disc: dx^2 + dy^2 <= radius^2.
    cdef int[::1] half = np.array(
        [int(np.floor(np.sqrt(float(radius * radius - dy * dy)))) for dy in range(-radius, radius + 1)],
        dtype=np.int32)

    cdef Py_ssize_t i
    cdef int cx, cy, dy, dx, px, py, hw
    cdef float d
    for i in range(n):
        cx = ix[i]
        cy = iy[i]
        d = depth[i]
        for dy in range(-radius, radius + 1):
            py = cy + dy
            if py < 0 or py >= height:
                continue
            hw = half[dy + radius]
            for dx in range(-hw, hw + 1):
                px = cx + dx
                if px < 0 or px >= width:
                    continue
                if d < zbuf[py, px]:
                    zbuf[py, px] = d
                    winner[py, px] = i
    return winner_arr
