"""Procedural benchmark bodies: deterministic voxel shapes by name.

All generators place the shape at the lattice origin with pitch
h = size / resolution and never exceed resolution 64 per axis.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError
from .voxgrid import VoxelGrid, connected_components, grid_from_coords

__all__ = ["SHAPE_KINDS", "gen_shape"]

SHAPE_KINDS = ("cube", "plate", "bar", "hollow-box", "L", "blob")

MAX_RESOLUTION = 64


def _solid(nx, ny, nz):
    return np.stack(np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz),
                                indexing="ij"), axis=-1).reshape(-1, 3)


def gen_shape(kind: str, resolution: int, size: float = 0.1, seed: int = 0) -> VoxelGrid:
    """Generate a named test body.

    kind : cube | plate | bar | hollow-box | L | blob.  The blob thresholds
    smoothed value noise drawn from `seed` and keeps the largest
    face-connected component (always >= 8 voxels).
    resolution : voxels along the longest axis, 1..64.
    size : longest side in meters (h = size / resolution).
    """
    if not (1 <= resolution <= MAX_RESOLUTION):
        raise InputError(f"resolution must be in [1, {MAX_RESOLUTION}], got {resolution}")
    if not (size > 0):
        raise InputError("size must be positive")
    h = size / resolution
    r = resolution
    if kind == "cube":
        coords = _solid(r, r, r)
    elif kind == "plate":
        t = max(1, r // 8)
        coords = _solid(r, r, t)
    elif kind == "bar":
        t = max(1, r // 4)
        coords = _solid(r, t, t)
    elif kind == "hollow-box":
        if r < 3:
            raise InputError("hollow-box needs resolution >= 3")
        coords = _solid(r, r, r)
        interior = ((coords > 0) & (coords < r - 1)).all(axis=1)
        coords = coords[~interior]
    elif kind == "L":
        t = max(1, r // 4)
        coords = _solid(r, t, r)
        keep = (coords[:, 0] < (r + 1) // 2) | (coords[:, 2] < (r + 1) // 2)
        coords = coords[keep]
    elif kind == "blob":
        return _blob(resolution, h, seed)
    else:
        raise InputError(f"unknown shape kind {kind!r}; choose from {SHAPE_KINDS}")
    return grid_from_coords(coords, h=h)


def _blob(resolution: int, h: float, seed: int) -> VoxelGrid:
    """Smoothed value noise, thresholded, largest component kept."""
    rng = np.random.default_rng(seed)
    coarse = rng.random((5, 5, 5))
    # trilinear upsample of the coarse lattice onto cell indices
    t = np.linspace(0.0, 4.0, resolution)
    i0 = np.minimum(t.astype(np.int64), 3)
    f = t - i0
    field = np.zeros((resolution, resolution, resolution))
    for dx in (0, 1):
        wx = (f if dx else 1.0 - f)[:, None, None]
        for dy in (0, 1):
            wy = (f if dy else 1.0 - f)[None, :, None]
            for dz in (0, 1):
                wz = (f if dz else 1.0 - f)[None, None, :]
                field += wx * wy * wz * coarse[np.ix_(i0 + dx, i0 + dy, i0 + dz)]
    for pct in range(60, 0, -5):
        mask = field >= np.percentile(field, pct)
        coords = np.argwhere(mask)
        if coords.shape[0] < 8:
            continue
        g = grid_from_coords(coords, h=h, dims=(resolution, resolution, resolution))
        largest = connected_components(g)[0]
        if largest.n_voxels >= 8:
            return largest
    raise InputError(f"blob generation degenerate for seed {seed}")
