"""Triangle mesh loading, watertightness, and the builtin generators."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from modalsound import (InputError, MeshError, TriangleMesh,
                        boundary_edge_count, box_mesh, is_watertight,
                        load_mesh, load_obj, load_stl, save_stl,
                        uv_sphere_mesh)


def test_box_mesh_is_watertight():
    m = box_mesh(size=(1.0, 2.0, 3.0))
    assert m.faces.shape == (12, 3)
    assert is_watertight(m)


def test_box_mesh_bounds():
    m = box_mesh(size=(2.0, 1.0, 0.25), center=(0.0, 1.0, 2.125))
    lo, hi = m.bounds()
    assert_allclose(lo, [-1.0, 0.5, 2.0])
    assert_allclose(hi, [1.0, 1.5, 2.25])


def test_box_mesh_outward_orientation():
    # signed volume via divergence theorem must equal the box volume
    m = box_mesh(size=2.0)
    v = m.vertices[m.faces]
    signed = np.einsum("ij,ij->i", v[:, 0], np.cross(v[:, 1], v[:, 2])).sum() / 6.0
    assert_allclose(signed, 8.0, rtol=1e-12)


def test_sphere_mesh_watertight_and_radius():
    center = np.array([1.0, -2.0, 0.5])
    m = uv_sphere_mesh(diameter=1.5, center=center)
    assert is_watertight(m)
    r = np.linalg.norm(m.vertices - center, axis=1)
    assert_allclose(r, 0.75, rtol=1e-12)


def test_sphere_mesh_outward_orientation():
    m = uv_sphere_mesh(diameter=2.0, n_theta=96, n_phi=48)
    v = m.vertices[m.faces]
    signed = np.einsum("ij,ij->i", v[:, 0], np.cross(v[:, 1], v[:, 2])).sum() / 6.0
    assert signed > 0
    # volume approaches 4/3 pi from below for an inscribed polyhedron
    assert 0.99 * 4.0 / 3.0 * np.pi < signed < 4.0 / 3.0 * np.pi


def test_open_mesh_detected():
    m = box_mesh()
    open_mesh = TriangleMesh(vertices=m.vertices, faces=m.faces[:-1])
    assert not is_watertight(open_mesh)
    assert boundary_edge_count(open_mesh) == 3


def test_translated():
    m = box_mesh()
    t = m.translated([5.0, 0.0, -1.0])
    assert_allclose(t.vertices, m.vertices + np.array([5.0, 0.0, -1.0]))
    assert_array_equal(t.faces, m.faces)


def test_stl_roundtrip(tmp_path):
    m = box_mesh(size=(0.1, 0.2, 0.3), center=(0.05, 0.1, 0.15))
    path = tmp_path / "box.stl"
    save_stl(m, path)
    back = load_stl(path)
    assert is_watertight(back)
    # binary STL stores a float32 soup; identical bytes weld back to 8 corners
    assert back.vertices.shape[0] == 8
    assert back.faces.shape == (12, 3)
    lo, hi = back.bounds()
    assert_allclose(lo, [0, 0, 0], atol=1e-7)
    assert_allclose(hi, [0.1, 0.2, 0.3], rtol=1e-6)


def test_load_obj(tmp_path):
    path = tmp_path / "tri.obj"
    path.write_text(
        "# comment\n"
        "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n"
        "f 1 2 3\nf 1 4 2\nf 2 4 3\nf 1 3 4\n")
    m = load_obj(path)
    assert m.vertices.shape == (4, 3)
    assert m.faces.shape == (4, 3)
    assert is_watertight(m)


def test_load_obj_negative_indices(tmp_path):
    path = tmp_path / "neg.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n")
    m = load_obj(path)
    # welding may reorder vertices; compare the referenced positions
    tri = m.vertices[m.faces[0]]
    assert_allclose(tri, [[0, 0, 0], [1, 0, 0], [0, 1, 0]])


def test_load_obj_rejects_quads(tmp_path):
    path = tmp_path / "quad.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    with pytest.raises(MeshError):
        load_obj(path)


def test_load_mesh_dispatch(tmp_path):
    p = tmp_path / "m.stl"
    save_stl(box_mesh(), p)
    assert load_mesh(p).faces.shape == (12, 3)
    with pytest.raises(InputError):
        load_mesh(tmp_path / "m.ply")


def test_ascii_stl(tmp_path):
    m = box_mesh()
    lines = ["solid box"]
    for tri in m.vertices[m.faces]:
        n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
        n = n / np.linalg.norm(n)
        lines.append(f"  facet normal {n[0]} {n[1]} {n[2]}")
        lines.append("    outer loop")
        for v in tri:
            lines.append(f"      vertex {v[0]} {v[1]} {v[2]}")
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append("endsolid box")
    p = tmp_path / "a.stl"
    p.write_text("\n".join(lines) + "\n")
    back = load_stl(p)
    assert back.faces.shape == (12, 3)
    assert is_watertight(back)


def test_degenerate_face_not_watertight():
    verts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
    m = TriangleMesh(vertices=verts, faces=np.array([[0, 1, 1]]))
    assert not is_watertight(m)


def test_bad_face_index_rejected():
    with pytest.raises(MeshError):
        TriangleMesh(vertices=np.zeros((3, 3)), faces=np.array([[0, 1, 3]]))
