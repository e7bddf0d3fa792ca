"""Triangle meshes: STL/OBJ loading, watertightness, and simple primitives.

Meshes are plain vertex/face arrays.  Loaders weld exactly-coincident
vertices so that STL triangle soups get a shared-vertex topology the
watertight check can reason about.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MeshError

__all__ = [
    "TriangleMesh",
    "load_mesh",
    "load_stl",
    "load_obj",
    "save_stl",
    "box_mesh",
    "uv_sphere_mesh",
    "is_watertight",
    "boundary_edge_count",
]


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle mesh.

    vertices : (V, 3) float64
    faces    : (F, 3) int64, counter-clockwise when viewed from outside
    """

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError("vertices must be (V, 3)")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError("faces must be (F, 3) triangles")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise MeshError("face index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    def bounds(self):
        """(min, max) corners of the axis-aligned bounding box."""
        if len(self.vertices) == 0:
            raise MeshError("empty mesh has no bounds")
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def translated(self, offset) -> "TriangleMesh":
        return TriangleMesh(self.vertices + np.asarray(offset, dtype=np.float64), self.faces)


def _weld(vertices: np.ndarray, faces: np.ndarray) -> TriangleMesh:
    # Exact-coordinate weld: STL writers repeat identical bytes per shared vertex.
    view = np.ascontiguousarray(vertices).view([("x", "f8"), ("y", "f8"), ("z", "f8")]).ravel()
    uniq, inverse = np.unique(view, return_inverse=True)
    welded = uniq.view(np.float64).reshape(-1, 3)
    return TriangleMesh(welded, inverse[faces])


def _edges(faces: np.ndarray) -> np.ndarray:
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    return np.sort(e, axis=1)


def _edge_use_counts(faces: np.ndarray) -> np.ndarray:
    e = _edges(faces)
    _, counts = np.unique(e, axis=0, return_counts=True)
    return counts


def boundary_edge_count(mesh: TriangleMesh) -> int:
    """Number of edges not shared by exactly two triangles."""
    counts = _edge_use_counts(mesh.faces)
    return int(np.count_nonzero(counts != 2))


def is_watertight(mesh: TriangleMesh) -> bool:
    """True when every undirected edge is used by exactly two triangles."""
    if len(mesh.faces) == 0:
        return False
    if (mesh.faces[:, 0] == mesh.faces[:, 1]).any() or \
       (mesh.faces[:, 1] == mesh.faces[:, 2]).any() or \
       (mesh.faces[:, 2] == mesh.faces[:, 0]).any():
        return False
    return boundary_edge_count(mesh) == 0


# ---------------------------------------------------------------------------
# loaders


def load_stl(path) -> TriangleMesh:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 84:
        return _load_stl_ascii(raw)
    (ntri,) = struct.unpack_from("<I", raw, 80)
    if len(raw) == 84 + 50 * ntri:
        return _load_stl_binary(raw, ntri)
    return _load_stl_ascii(raw)


def _load_stl_binary(raw: bytes, ntri: int) -> TriangleMesh:
    rec = np.frombuffer(raw, dtype=np.uint8, count=50 * ntri, offset=84).reshape(ntri, 50)
    tri = rec[:, 12:48].copy().view("<f4").reshape(ntri, 3, 3).astype(np.float64)
    verts = tri.reshape(-1, 3)
    faces = np.arange(3 * ntri, dtype=np.int64).reshape(ntri, 3)
    return _weld(verts, faces)


def _load_stl_ascii(raw: bytes) -> TriangleMesh:
    verts = []
    for line in raw.decode("ascii", errors="replace").splitlines():
        parts = line.split()
        if len(parts) == 4 and parts[0] == "vertex":
            verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
    if not verts or len(verts) % 3 != 0:
        raise MeshError("malformed ASCII STL")
    verts = np.asarray(verts, dtype=np.float64)
    faces = np.arange(len(verts), dtype=np.int64).reshape(-1, 3)
    return _weld(verts, faces)


def load_obj(path) -> TriangleMesh:
    verts, faces = [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
        elif parts[0] == "f":
            idx = [int(p.split("/")[0]) for p in parts[1:]]
            if len(idx) != 3:
                raise MeshError("OBJ faces must be triangles")
            faces.append([i - 1 if i > 0 else len(verts) + i for i in idx])
    if not verts or not faces:
        raise MeshError("OBJ file contains no triangles")
    return _weld(np.asarray(verts, dtype=np.float64), np.asarray(faces, dtype=np.int64))


def load_mesh(path) -> TriangleMesh:
    """Dispatch on extension: .stl (ASCII or binary) or .obj."""
    path = Path(path)
    ext = path.suffix.lower()
    if ext == ".stl":
        return load_stl(path)
    if ext == ".obj":
        return load_obj(path)
    raise MeshError(f"unsupported mesh format: {ext!r} (expected .stl or .obj)")


def save_stl(mesh: TriangleMesh, path) -> None:
    """Write binary STL (demos and test fixtures)."""
    tri = mesh.vertices[mesh.faces]
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    n = np.cross(b - a, c - a)
    norm = np.linalg.norm(n, axis=1, keepdims=True)
    n = np.where(norm > 0, n / np.where(norm == 0, 1.0, norm), 0.0)
    rec = np.zeros((len(tri), 50), dtype=np.uint8)
    data = np.concatenate([n[:, None, :], tri], axis=1).astype("<f4")
    rec[:, :48] = data.reshape(len(tri), 48 // 4).view(np.uint8).reshape(len(tri), 48)
    with open(path, "wb") as fh:
        fh.write(b"\0" * 80)
        fh.write(struct.pack("<I", len(tri)))
        fh.write(rec.tobytes())


# ---------------------------------------------------------------------------
# primitives


def box_mesh(size=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned box with outward-facing triangles."""
    size = np.broadcast_to(np.asarray(size, dtype=np.float64), (3,))
    center = np.asarray(center, dtype=np.float64)
    corners = np.array([[x, y, z] for z in (0, 1) for y in (0, 1) for x in (0, 1)], dtype=np.float64)
    verts = (corners - 0.5) * size + center
    # two triangles per face, wound outward
    quads = [
        (0, 2, 3, 1),  # -z
        (4, 5, 7, 6),  # +z
        (0, 1, 5, 4),  # -y
        (2, 6, 7, 3),  # +y
        (0, 4, 6, 2),  # -x
        (1, 3, 7, 5),  # +x
    ]
    faces = []
    for a, b, c, d in quads:
        faces.append([a, b, c])
        faces.append([a, c, d])
    return TriangleMesh(verts, np.asarray(faces, dtype=np.int64))


def uv_sphere_mesh(diameter=1.0, center=(0.0, 0.0, 0.0), n_theta=48, n_phi=24) -> TriangleMesh:
    """Watertight UV sphere with pole fans."""
    r = diameter / 2.0
    center = np.asarray(center, dtype=np.float64)
    verts = [center + [0.0, 0.0, r]]
    for j in range(1, n_phi):
        phi = np.pi * j / n_phi
        for i in range(n_theta):
            th = 2.0 * np.pi * i / n_theta
            verts.append(center + r * np.array([np.sin(phi) * np.cos(th),
                                                np.sin(phi) * np.sin(th),
                                                np.cos(phi)]))
    verts.append(center + [0.0, 0.0, -r])
    south = len(verts) - 1
    ring = lambda j, i: 1 + (j - 1) * n_theta + (i % n_theta)
    faces = []
    for i in range(n_theta):
        faces.append([0, ring(1, i), ring(1, i + 1)])
    for j in range(1, n_phi - 1):
        for i in range(n_theta):
            a, b = ring(j, i), ring(j, i + 1)
            c, d = ring(j + 1, i), ring(j + 1, i + 1)
            faces.append([a, c, d])
            faces.append([a, d, b])
    for i in range(n_theta):
        faces.append([south, ring(n_phi - 1, i + 1), ring(n_phi - 1, i)])
    return TriangleMesh(np.asarray(verts, dtype=np.float64), np.asarray(faces, dtype=np.int64))
