"""Stencil (27-tap) form of the assembled operators.

Tap t, offset i: block row j of W_i equals block row j' of the element
matrix, where j' is the corner slot of the same lattice vertex seen from
the neighbor cell at u+i.  Applying the stencil to gathered vertex data and
averaging the per-voxel copies back must reproduce A @ x exactly.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from modalsound import (InputError, assemble, element_matrices,
                        equivalence_error, gen_shape, grid_from_coords,
                        kernel_from_element, sparse_conv_apply,
                        vertex_to_voxel, voxel_to_vertex)
from modalsound.convequiv import NEIGHBOR_OFFSETS
from modalsound.voxgrid import CORNER_OFFSETS


def test_neighbor_offsets_cover_cube():
    assert NEIGHBOR_OFFSETS.shape == (27, 3)
    assert_array_equal(np.unique(NEIGHBOR_OFFSETS, axis=0), NEIGHBOR_OFFSETS[
        np.lexsort((NEIGHBOR_OFFSETS[:, 2], NEIGHBOR_OFFSETS[:, 1], NEIGHBOR_OFFSETS[:, 0]))])
    assert NEIGHBOR_OFFSETS.min() == -1 and NEIGHBOR_OFFSETS.max() == 1


def test_center_tap_is_element_matrix(ceramic):
    em = element_matrices(ceramic, 0.02)
    kern = kernel_from_element(em, "stiffness")
    assert_allclose(kern.tap((0, 0, 0)), em.Ke, rtol=0, atol=0)


def test_corner_tap_single_block(ceramic):
    # offset (1,1,1): only corner slot 7 of u coincides with slot 0 of u+(1,1,1)
    em = element_matrices(ceramic, 0.02)
    kern = kernel_from_element(em, "mass")
    W = kern.tap((1, 1, 1))
    assert_allclose(W[21:24, :], em.Me[0:3, :])
    mask = np.ones(24, dtype=bool)
    mask[21:24] = False
    assert np.abs(W[mask, :]).max() == 0.0


def test_tap_row_structure(ceramic):
    # every tap row block is either zero or a copy of one element block row
    em = element_matrices(ceramic, 0.02)
    kern = kernel_from_element(em, "stiffness")
    for t, off in enumerate(NEIGHBOR_OFFSETS):
        for j, cj in enumerate(CORNER_OFFSETS):
            shifted = cj - off
            rows = kern.taps[t, 3 * j: 3 * j + 3, :]
            if ((shifted >= 0) & (shifted <= 1)).all():
                jp = int(np.nonzero((CORNER_OFFSETS == shifted).all(axis=1))[0][0])
                assert_allclose(rows, em.Ke[3 * jp: 3 * jp + 3, :], rtol=0, atol=0)
            else:
                assert np.abs(rows).max() == 0.0


def test_invalid_kind_rejected(ceramic):
    em = element_matrices(ceramic, 0.02)
    with pytest.raises(InputError):
        kernel_from_element(em, "damping")


@pytest.mark.parametrize("which", ["stiffness", "mass"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_equivalence_random_blob(ceramic, which, seed):
    g = gen_shape("blob", 8, size=0.1, seed=seed)
    em = element_matrices(ceramic, g.h)
    rng = np.random.default_rng(seed + 100)
    x = rng.standard_normal(3 * g.n_vertices)
    assert equivalence_error(g, em, x, which=which) < 1e-10


def test_equivalence_linearity(ceramic, rng):
    g = gen_shape("L", 6, size=0.1)
    em = element_matrices(ceramic, g.h)
    kern = kernel_from_element(em, "stiffness")
    x1 = rng.standard_normal(3 * g.n_vertices)
    x2 = rng.standard_normal(3 * g.n_vertices)

    def conv_path(x):
        return voxel_to_vertex(g, sparse_conv_apply(g, kern, vertex_to_voxel(g, x)))

    lhs = conv_path(2.0 * x1 - 3.0 * x2)
    rhs = 2.0 * conv_path(x1) - 3.0 * conv_path(x2)
    assert_allclose(lhs, rhs, rtol=0, atol=1e-9 * np.abs(rhs).max())


def test_translation_in_nullspace(ceramic):
    # rigid translation: stiffness stencil output vanishes like K @ t
    g = gen_shape("bar", 8, size=0.1)
    em = element_matrices(ceramic, g.h)
    kern = kernel_from_element(em, "stiffness")
    t = np.tile([1.0, 0.0, 0.0], g.n_vertices)
    out = voxel_to_vertex(g, sparse_conv_apply(g, kern, vertex_to_voxel(g, t)))
    assert np.abs(out).max() < 1e-6 * np.abs(em.Ke).max()


def test_conv_apply_shape_guard(ceramic):
    g = grid_from_coords([(0, 0, 0)], h=0.1)
    em = element_matrices(ceramic, g.h)
    kern = kernel_from_element(em, "mass")
    with pytest.raises(InputError):
        sparse_conv_apply(g, kern, np.zeros((2, 24)))


def test_equivalence_on_two_cell_grid(ceramic, rng):
    # smallest grid with a shared face: averaging across 4 shared vertices
    g = grid_from_coords([(0, 0, 0), (1, 0, 0)], h=0.05)
    em = element_matrices(ceramic, g.h)
    sys_ = assemble(g, em)
    x = rng.standard_normal(sys_.K.shape[0])
    for which, A in (("stiffness", sys_.K), ("mass", sys_.M)):
        err = equivalence_error(g, em, x, which=which, matrix=A)
        assert err < 1e-12
