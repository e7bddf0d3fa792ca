"""Sparse voxel grids on a regular lattice, plus the vertex/voxel projections.

A grid stores occupied cells as a sorted coordinate set (never a dense
array), a shared corner-vertex indexing, and its world placement (origin of
cell (0,0,0) and pitch h).  Corner order within a cell is fixed: offsets
(0/1)^3 enumerated z-major, then y, then x, i.e. x varies fastest:

    index 0..7  ->  (0,0,0) (1,0,0) (0,1,0) (1,1,0) (0,0,1) (1,0,1) (0,1,1) (1,1,1)

Every per-cell 24-vector used in this package packs those 8 corners in this
order with 3 slots (x,y,z) per corner.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError, MeshError
from .mesh import TriangleMesh, is_watertight, boundary_edge_count

__all__ = [
    "CORNER_OFFSETS",
    "FACE_DIRECTIONS",
    "FACE_CORNERS",
    "VoxelGrid",
    "voxelize",
    "grid_from_coords",
    "connected_components",
    "vertex_to_voxel",
    "voxel_to_vertex",
    "surface_exposure",
    "save_vgrid",
    "load_vgrid",
]

# Corner offsets in canonical order (x fastest, z slowest).
CORNER_OFFSETS = np.array(
    [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0],
     [0, 0, 1], [1, 0, 1], [0, 1, 1], [1, 1, 1]], dtype=np.int64)

# Face order used everywhere: -x, +x, -y, +y, -z, +z.
FACE_DIRECTIONS = np.array(
    [[-1, 0, 0], [1, 0, 0], [0, -1, 0], [0, 1, 0], [0, 0, -1], [0, 0, 1]], dtype=np.int64)

# Corner indices (into CORNER_OFFSETS) of the 4 corners on each face.
FACE_CORNERS = np.array([
    [0, 2, 4, 6],  # -x
    [1, 3, 5, 7],  # +x
    [0, 1, 4, 5],  # -y
    [2, 3, 6, 7],  # +y
    [0, 1, 2, 3],  # -z
    [4, 5, 6, 7],  # +z
], dtype=np.int64)


def _encode(coords: np.ndarray, dims) -> np.ndarray:
    """Monotone scalar key for lattice triplets; x-major lexicographic order."""
    ky = int(dims[1]) + 2
    kz = int(dims[2]) + 2
    c = np.asarray(coords, dtype=np.int64)
    return (c[..., 0] * ky + c[..., 1]) * kz + c[..., 2]


@dataclass
class VoxelGrid:
    """Occupied voxel set with shared-corner vertex indexing.

    dims     : allocated lattice extent per axis (occupied coords lie in [0, dims)).
    h        : voxel pitch in meters.
    occupied : (N, 3) int64, sorted lexicographically by (x, y, z).
    origin   : world position of the (0,0,0) cell corner.
    """

    dims: tuple
    h: float
    occupied: np.ndarray
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        occ = np.asarray(self.occupied, dtype=np.int64).reshape(-1, 3)
        if occ.shape[0] == 0:
            raise InputError("grid has no occupied voxels")
        if occ.min() < 0 or (occ >= np.asarray(self.dims, dtype=np.int64)).any():
            raise InputError("occupied coordinates outside [0, dims)")
        order = np.lexsort((occ[:, 2], occ[:, 1], occ[:, 0]))
        occ = occ[order]
        keys = _encode(occ, self.dims)
        if np.unique(keys).size != keys.size:
            raise InputError("duplicate occupied coordinates")
        self.occupied = occ
        self.dims = tuple(int(d) for d in self.dims)
        self.origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        self._keys = keys
        # vertex lattice: union of cell corners, ids assigned in lexicographic order
        corners = (occ[:, None, :] + CORNER_OFFSETS[None, :, :]).reshape(-1, 3)
        ckeys = _encode(corners, self.dims)
        vkeys, inverse = np.unique(ckeys, return_inverse=True)
        self._vertex_keys = vkeys
        self.voxel_corner_ids = inverse.reshape(-1, 8)
        kz = self.dims[2] + 2
        ky = self.dims[1] + 2
        x, rem = np.divmod(vkeys, ky * kz)
        y, z = np.divmod(rem, kz)
        self.vertex_lattice = np.stack([x, y, z], axis=1)

    @property
    def n_voxels(self) -> int:
        return self.occupied.shape[0]

    @property
    def n_vertices(self) -> int:
        return self._vertex_keys.size

    def contains(self, coords) -> np.ndarray:
        """Boolean occupancy for integer coordinate rows (out-of-range -> False)."""
        c = np.asarray(coords, dtype=np.int64).reshape(-1, 3)
        ok = ((c >= 0) & (c < np.asarray(self.dims))).all(axis=1)
        keys = _encode(np.where(ok[:, None], c, 0), self.dims)
        idx = np.searchsorted(self._keys, keys)
        idx = np.minimum(idx, self._keys.size - 1)
        return ok & (self._keys[idx] == keys)

    def voxel_index(self, coords) -> np.ndarray:
        """Row index into `occupied` for each coordinate; -1 when unoccupied."""
        c = np.asarray(coords, dtype=np.int64).reshape(-1, 3)
        keys = _encode(c, self.dims)
        idx = np.searchsorted(self._keys, keys)
        idx = np.minimum(idx, self._keys.size - 1)
        hit = (self._keys[idx] == keys) & (c >= 0).all(axis=1) & (c < np.asarray(self.dims)).all(axis=1)
        return np.where(hit, idx, -1)

    def vertex_positions(self) -> np.ndarray:
        """World coordinates of the indexed corner vertices, (M, 3)."""
        return self.origin + self.vertex_lattice * self.h

    def voxel_centers(self) -> np.ndarray:
        return self.origin + (self.occupied + 0.5) * self.h

    def vertex_incidence(self) -> np.ndarray:
        """Number of occupied voxels adjacent to each vertex (1..8)."""
        counts = np.zeros(self.n_vertices, dtype=np.int64)
        np.add.at(counts, self.voxel_corner_ids.ravel(), 1)
        return counts

    def occupied_bounds_world(self):
        """Tight world-space bounding box of the occupied cells."""
        lo = self.origin + self.occupied.min(axis=0) * self.h
        hi = self.origin + (self.occupied.max(axis=0) + 1) * self.h
        return lo, hi


def grid_from_coords(coords, h=1.0, origin=(0.0, 0.0, 0.0), dims=None) -> VoxelGrid:
    """Build a grid from integer coordinates; dims default to the tight extent."""
    coords = np.asarray(coords, dtype=np.int64).reshape(-1, 3)
    if coords.shape[0] == 0:
        raise InputError("no voxels given")
    if coords.min() < 0:
        raise InputError("coordinates must be non-negative")
    if dims is None:
        dims = tuple(int(d) for d in coords.max(axis=0) + 1)
    return VoxelGrid(dims=dims, h=float(h), occupied=coords, origin=np.asarray(origin, dtype=np.float64))


# ---------------------------------------------------------------------------
# voxelization


def _ray_parity(points: np.ndarray, mesh: TriangleMesh, axis: int,
                jitter=(0.0, 0.0)) -> np.ndarray:
    """Crossing parity of +axis rays from each point.  Vectorized, chunked.

    jitter shifts the projected ray origins so rays do not pass exactly
    through shared triangle edges (which would count twice and flip parity).
    """
    other = [a for a in range(3) if a != axis]
    tri = mesh.vertices[mesh.faces]  # (F, 3, 3)
    a2 = tri[:, 0][:, other]
    b2 = tri[:, 1][:, other]
    c2 = tri[:, 2][:, other]
    az = tri[:, 0][:, axis]
    bz = tri[:, 1][:, axis]
    cz = tri[:, 2][:, axis]
    e1 = b2 - a2
    e2 = c2 - a2
    denom = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    keep = np.abs(denom) > 1e-14 * max(1.0, float(np.abs(tri).max())) ** 2
    a2, e1, e2, denom = a2[keep], e1[keep], e2[keep], denom[keep]
    az, bz, cz = az[keep], bz[keep], cz[keep]
    dz1 = bz - az
    dz2 = cz - az

    counts = np.zeros(len(points), dtype=np.int64)
    p2 = points[:, other] + np.asarray(jitter, dtype=np.float64)
    pz = points[:, axis]
    chunk = max(1, int(4.0e6 // max(1, len(a2))))
    for start in range(0, len(points), chunk):
        sl = slice(start, start + chunk)
        d = p2[sl][:, None, :] - a2[None, :, :]  # (P, F, 2)
        u = (d[:, :, 0] * e2[None, :, 1] - d[:, :, 1] * e2[None, :, 0]) / denom
        v = (e1[None, :, 0] * d[:, :, 1] - e1[None, :, 1] * d[:, :, 0]) / denom
        hit2d = (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0)
        zstar = az[None, :] + u * dz1[None, :] + v * dz2[None, :]
        counts[sl] = np.count_nonzero(hit2d & (zstar > pz[sl][:, None]), axis=1)
    return counts % 2 == 1


def voxelize(mesh: TriangleMesh, target_resolution: int) -> VoxelGrid:
    """Voxelize a watertight triangle mesh by cell-center containment.

    The longest bounding-box side spans `target_resolution` cells, so
    h = longest_side / target_resolution and the lattice is anchored at the
    bounding-box minimum (occupancy is therefore translation invariant).
    A cell is occupied iff its center lies inside the mesh, decided by
    axis-aligned ray-crossing parity with a 2-of-3 majority vote.

    Raises
    ------
    MeshError   : mesh not watertight (diagnostic includes open-edge count).
    InputError  : degenerate resolution or empty occupancy.
    """
    if target_resolution < 1:
        raise InputError("target_resolution must be >= 1")
    if not is_watertight(mesh):
        raise MeshError(
            f"mesh is not watertight: {boundary_edge_count(mesh)} edges are not "
            "shared by exactly two triangles")
    lo, hi = mesh.bounds()
    extent = hi - lo
    longest = float(extent.max())
    if longest <= 0:
        raise MeshError("mesh bounding box is degenerate")
    h = longest / target_resolution
    dims = np.maximum(1, np.ceil(extent / h - 1e-9).astype(np.int64))
    grids = np.stack(np.meshgrid(*[np.arange(d) for d in dims], indexing="ij"), axis=-1).reshape(-1, 3)
    centers = lo + (grids + 0.5) * h
    jitter = h * np.array([7.3e-5, 3.1e-5])
    votes = sum(_ray_parity(centers, mesh, axis, jitter).astype(np.int64)
                for axis in range(3))
    inside = votes >= 2
    if not inside.any():
        raise InputError("voxelization produced an empty grid; increase the resolution")
    return VoxelGrid(dims=tuple(int(d) for d in dims), h=h, occupied=grids[inside], origin=lo)


# ---------------------------------------------------------------------------
# topology


def connected_components(g: VoxelGrid) -> list:
    """Split into face-connected (6-neighborhood) components.

    Components keep the parent lattice frame (same dims, h, origin) and are
    returned largest-first; ties broken by smallest first coordinate.
    """
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components as cc

    n = g.n_voxels
    rows, cols = [], []
    for d in FACE_DIRECTIONS[[1, 3, 5]]:  # +x, +y, +z suffice for symmetry
        nb = g.voxel_index(g.occupied + d)
        src = np.nonzero(nb >= 0)[0]
        rows.append(src)
        cols.append(nb[src])
    if rows:
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
    adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    ncomp, labels = cc(adj, directed=False)
    comps = []
    for label in range(ncomp):
        coords = g.occupied[labels == label]
        comps.append(VoxelGrid(dims=g.dims, h=g.h, occupied=coords, origin=g.origin))
    comps.sort(key=lambda c: (-c.n_voxels, tuple(c.occupied[0])))
    return comps


def surface_exposure(g: VoxelGrid) -> np.ndarray:
    """(N, 6) uint8 exposure flags per voxel, face order -x,+x,-y,+y,-z,+z.

    A face is exposed when the face-adjacent cell is unoccupied (allocated
    boundary counts as unoccupied).
    """
    exp = np.empty((g.n_voxels, 6), dtype=np.uint8)
    for f, d in enumerate(FACE_DIRECTIONS):
        exp[:, f] = ~g.contains(g.occupied + d)
    return exp


# ---------------------------------------------------------------------------
# vertex <-> voxel projections


def vertex_to_voxel(g: VoxelGrid, x: np.ndarray) -> np.ndarray:
    """Gather a per-vertex 3-vector field into per-voxel 24-vectors.

    x : (3M,) with vertex v occupying slots 3v..3v+2.
    Returns (N, 24): corner c of voxel n sits at slots 3c..3c+2.
    """
    x = np.asarray(x)
    if x.shape != (3 * g.n_vertices,):
        raise InputError(f"expected field of length {3 * g.n_vertices}, got {x.shape}")
    per_vertex = x.reshape(g.n_vertices, 3)
    return per_vertex[g.voxel_corner_ids].reshape(g.n_voxels, 24)


def voxel_to_vertex(g: VoxelGrid, y: np.ndarray) -> np.ndarray:
    """Average per-voxel 24-vectors back onto vertices; inverse of the gather.

    Each vertex averages the matching 3 slots over all adjacent occupied
    voxels, so vertex_to_voxel followed by voxel_to_vertex is the identity.
    """
    y = np.asarray(y)
    if y.shape != (g.n_voxels, 24):
        raise InputError(f"expected (N, 24) with N={g.n_voxels}, got {y.shape}")
    acc = np.zeros((g.n_vertices, 3), dtype=np.result_type(y.dtype, np.float64))
    np.add.at(acc, g.voxel_corner_ids.ravel(), y.reshape(-1, 8, 3).reshape(-1, 3))
    counts = g.vertex_incidence()
    return (acc / counts[:, None]).reshape(-1)


# ---------------------------------------------------------------------------
# .vgrid container: one-line JSON header, newline, raw little-endian u32 triplets


def save_vgrid(g: VoxelGrid, path) -> None:
    header = {
        "dims": list(g.dims),
        "h": g.h,
        "count": int(g.n_voxels),
        "corner_order": "zyx",
        "origin": [float(v) for v in g.origin],
    }
    payload = np.ascontiguousarray(g.occupied, dtype="<u4").tobytes()
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)


def load_vgrid(path) -> VoxelGrid:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise InputError("truncated .vgrid: missing header line")
    header = json.loads(raw[:nl].decode("utf-8"))
    count = int(header["count"])
    body = raw[nl + 1:]
    if len(body) != 12 * count:
        raise InputError("truncated .vgrid: payload size mismatch")
    occ = np.frombuffer(body, dtype="<u4").reshape(count, 3).astype(np.int64)
    return VoxelGrid(
        dims=tuple(header["dims"]),
        h=float(header["h"]),
        occupied=occ,
        origin=np.asarray(header.get("origin", [0.0, 0.0, 0.0]), dtype=np.float64),
    )
