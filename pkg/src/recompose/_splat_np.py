"""Pure-numpy splat rasterization kernel.

Matches the compiled kernel bit for bit: the per-pixel winner is the point
minimizing (float32 depth, point index) lexicographically.  Implemented as a
scatter-min over packed uint64 keys (depth bits in the high word, index in the
low word); positive float32 bit patterns order the same way as their values,
so the packed comparison is exact.
"""

from __future__ import annotations

import numpy as np

_EMPTY = np.uint64(0xFFFFFFFFFFFFFFFF)


def _disc_offsets(radius: int) -> list[tuple[int, int]]:
    offs = []
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dx * dx + dy * dy <= radius * radius:
                offs.append((dy, dx))
    return offs


def splat_winner(ix: np.ndarray, iy: np.ndarray, depth: np.ndarray,
                 height: int, width: int, radius: int) -> np.ndarray:
    """Return per-pixel winning point index (int64, -1 where no splat lands)."""
    keys = np.full(height * width, _EMPTY, dtype=np.uint64)
    if ix.shape[0] > 0:
        packed = (depth.view(np.uint32).astype(np.uint64) << np.uint64(32)) \
            | np.arange(ix.shape[0], dtype=np.uint64)
        for dy, dx in _disc_offsets(radius):
            px = ix + dx
            py = iy + dy
            ok = (px >= 0) & (px < width) & (py >= 0) & (py < height)
            np.minimum.at(keys, py[ok].astype(np.int64) * width + px[ok], packed[ok])
    winner = (keys & np.uint64(0xFFFFFFFF)).astype(np.int64)
    winner[keys == _EMPTY] = -1
    return winner.reshape(height, width)
