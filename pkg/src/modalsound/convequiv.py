"""Sparse 3x3x3 convolution form of the assembled matrix-vector product.

On the per-voxel 24-slot representation, applying the assembled stiffness or
mass matrix is a 27-offset stationary convolution.  For output voxel u and
neighbor offset i, the 24x24 tap W_i has block row j (corner j of u) equal
to block row j' of the element matrix, where j' is the corner index that the
same lattice vertex has inside the neighbor cell u+i; block rows whose
vertex does not belong to cell u+i are zero.  Summing taps over the occupied
neighborhood reproduces, in every corner slot, the fully assembled product
at that vertex, so the voxel-to-vertex averaging returns A @ x exactly (all
copies of a shared vertex agree).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .hexfem import ElementMatrices
from .voxgrid import CORNER_OFFSETS, VoxelGrid, vertex_to_voxel, voxel_to_vertex

__all__ = ["ConvKernel", "kernel_from_element", "sparse_conv_apply", "equivalence_error"]

# All 27 neighbor offsets, fixed order: x-major lexicographic over {-1,0,1}^3.
NEIGHBOR_OFFSETS = np.array(
    [[dx, dy, dz] for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)],
    dtype=np.int64)

_CORNER_INDEX = {tuple(off): c for c, off in enumerate(CORNER_OFFSETS)}


@dataclass(frozen=True)
class ConvKernel:
    """Stack of 27 taps, (27, 24, 24), aligned with NEIGHBOR_OFFSETS."""

    taps: np.ndarray
    which: str

    def tap(self, offset) -> np.ndarray:
        offset = tuple(int(v) for v in offset)
        for idx, off in enumerate(NEIGHBOR_OFFSETS):
            if tuple(off) == offset:
                return self.taps[idx]
        raise InputError(f"offset {offset} outside the 3x3x3 neighborhood")


def kernel_from_element(em: ElementMatrices, which: str) -> ConvKernel:
    """Build the 27 taps from one element matrix ('stiffness' or 'mass')."""
    if which == "stiffness":
        Ae = em.Ke
    elif which == "mass":
        Ae = em.Me
    else:
        raise InputError(f"which must be 'stiffness' or 'mass', got {which!r}")
    taps = np.zeros((27, 24, 24))
    for t, off in enumerate(NEIGHBOR_OFFSETS):
        for j in range(8):
            shifted = tuple(CORNER_OFFSETS[j] - off)
            jp = _CORNER_INDEX.get(shifted)
            if jp is None:
                continue  # corner j of the center cell is not a vertex of cell u+off
            taps[t, 3 * j: 3 * j + 3, :] = Ae[3 * jp: 3 * jp + 3, :]
    return ConvKernel(taps=taps, which=which)


def sparse_conv_apply(g: VoxelGrid, kernel: ConvKernel, y: np.ndarray) -> np.ndarray:
    """Apply the convolution over the occupied set: out_u = sum_i W_i y_{u+i}."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (g.n_voxels, 24):
        raise InputError(f"expected (N, 24) input with N={g.n_voxels}, got {y.shape}")
    out = np.zeros_like(y)
    for t, off in enumerate(NEIGHBOR_OFFSETS):
        nb = g.voxel_index(g.occupied + off)
        src = np.nonzero(nb >= 0)[0]
        if src.size == 0:
            continue
        out[src] += y[nb[src]] @ kernel.taps[t].T
    return out


def equivalence_error(g: VoxelGrid, em: ElementMatrices, x: np.ndarray,
                      which: str = "stiffness", kernel: ConvKernel = None,
                      matrix=None) -> float:
    """Relative gap between the convolution path and the assembled product.

    Computes ||voxel_to_vertex(conv(vertex_to_voxel(x))) - A @ x|| / ||A @ x||.
    The construction makes every per-voxel copy of a shared vertex carry the
    complete assembled value, so the averaging reduction compares directly
    against A @ x with no multiplicity factor.  Pass kernel/matrix to reuse
    them across trials.
    """
    from .hexfem import assemble

    if kernel is None:
        kernel = kernel_from_element(em, which)
    elif kernel.which != which:
        raise InputError(f"kernel is for {kernel.which!r}, requested {which!r}")
    if matrix is None:
        sys_ = assemble(g, em)
        matrix = sys_.K if which == "stiffness" else sys_.M
    A = matrix
    ref = A @ x
    via_conv = voxel_to_vertex(g, sparse_conv_apply(g, kernel, vertex_to_voxel(g, x)))
    denom = float(np.linalg.norm(ref))
    if denom == 0.0:
        return float(np.linalg.norm(via_conv))
    return float(np.linalg.norm(via_conv - ref) / denom)
