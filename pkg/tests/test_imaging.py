import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from voxradar._mctable import CORNERS, EDGES, TRI_TABLE
from voxradar.imaging import (
    Mesh,
    heatmap_slice,
    marching_cubes,
    peak_voxel,
    spherical_to_cartesian,
    threshold_normalize,
)
from voxradar.reconstruct import GridSpec, PowerGrid, reconstruct_grid
from voxradar.scenesim import ArrayGeometry, ChirpConfig, Reflector, Scene, synthesize_frame

DEG = math.pi / 180
SPEC = GridSpec(1.0, 1.6, 0.1, -20 * DEG, 20 * DEG, 10 * DEG, -30 * DEG, 30 * DEG, 10 * DEG)  # 6x4x6


def grid(values):
    return PowerGrid(np.asarray(values, dtype=float), SPEC)


def zeros():
    return np.zeros(SPEC.dims)


# -- peak voxel / slices ---------------------------------------------------------

def test_peak_voxel_single_and_uniform():
    v = zeros()
    v[2, 1, 4] = 3.0
    assert peak_voxel(grid(v)) == (2, 1, 4)
    assert peak_voxel(grid(np.ones(SPEC.dims))) == (0, 0, 0)


def test_peak_voxel_from_reconstruction():
    spec = GridSpec(0.5, 2.1, 0.1, 0.0, 45 * DEG, 9 * DEG, -60 * DEG, 60 * DEG, 10 * DEG)
    geom, chirp = ArrayGeometry(3, 3, 0.02, 0.02), ChirpConfig(samples_per_chirp=64)
    idx = (11, 3, 2)
    f = synthesize_frame(Scene((Reflector(*spec.center(idx)),), 0), geom, chirp)
    g = reconstruct_grid(f, geom, chirp, spec)
    assert peak_voxel(g) == idx
    hm = heatmap_slice(g, idx[1])
    assert hm.values.max() == g.values.max()


@settings(max_examples=30, deadline=None)
@given(arrays(float, SPEC.dims, elements=st.floats(0, 100)), st.floats(0.01, 50))
def test_peak_voxel_scale_invariant(v, s):
    g = grid(v)
    assert peak_voxel(g) == peak_voxel(g.with_values(v * s))


def test_heatmap_slice_copy_roundtrip_and_errors():
    rng = np.random.default_rng(0)
    v = rng.uniform(0, 1, SPEC.dims)
    g = grid(v)
    rebuilt = np.zeros_like(v)
    for j in range(v.shape[1]):
        hm = heatmap_slice(g, j)
        assert hm.theta == pytest.approx(SPEC.theta_centers()[j])
        rebuilt[:, j, :] = hm.values
    assert np.array_equal(rebuilt, v)
    hm = heatmap_slice(g, 0)
    hm.values[:] = -1
    assert g.values.min() >= 0  # the slice is a copy
    assert not heatmap_slice(grid(zeros()), 2).values.any()
    with pytest.raises(IndexError):
        heatmap_slice(g, 4)
    with pytest.raises(IndexError):
        heatmap_slice(g, -1)


# -- threshold ---------------------------------------------------------------------

def test_threshold_examples():
    rng = np.random.default_rng(1)
    v = rng.uniform(0.1, 1, SPEC.dims)
    assert np.array_equal(threshold_normalize(grid(v), 1e-12).values, v)
    only = threshold_normalize(grid(v), 1.0).values
    assert np.count_nonzero(only) == 1 and only.max() == v.max()
    two = zeros()
    two[0, 0, 0], two[4, 2, 3] = 10.0, 4.0
    out = threshold_normalize(grid(two), 0.5).values
    assert out[0, 0, 0] == 10.0 and out[4, 2, 3] == 0.0
    for bad in (0.0, 1.5, -0.2):
        with pytest.raises(ValueError):
            threshold_normalize(grid(v), bad)


@settings(max_examples=30, deadline=None)
@given(arrays(float, SPEC.dims, elements=st.floats(0, 10)), st.floats(0.01, 1.0))
def test_threshold_idempotent(v, k):
    once = threshold_normalize(grid(v), k)
    assert np.array_equal(threshold_normalize(once, k).values, once.values)


# -- coordinates -------------------------------------------------------------------

def test_spherical_to_cartesian():
    np.testing.assert_allclose(spherical_to_cartesian(2.0, 0.0, 0.0), [0, 0, 2], atol=1e-15)
    np.testing.assert_allclose(spherical_to_cartesian(1.0, 0.0, math.pi / 2), [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(spherical_to_cartesian(1.0, math.pi / 2, 0.0), [0, 1, 0], atol=1e-15)
    p = spherical_to_cartesian(np.array([1.3, 2.0]), np.array([0.2, -0.3]), np.array([0.5, 1.0]))
    np.testing.assert_allclose(np.linalg.norm(p, axis=-1), [1.3, 2.0])


# -- marching cubes table ------------------------------------------------------------

def test_table_complementary_structure():
    assert len(TRI_TABLE) == 256
    assert len(TRI_TABLE[0]) == 0
    assert len(TRI_TABLE[255]) == 0
    for case in range(1, 255):
        crossed = {e for e, (a, b) in enumerate(EDGES)
                   if ((case >> a) & 1) != ((case >> b) & 1)}
        used = {e for tri in TRI_TABLE[case] for e in tri}
        assert used == crossed, case
        assert 1 <= len(TRI_TABLE[case]) <= 5


def test_table_corner_layout():
    assert len(CORNERS) == 8 and len(set(CORNERS)) == 8
    for a, b in EDGES:
        diff = [abs(x - y) for x, y in zip(CORNERS[a], CORNERS[b])]
        assert sorted(diff) == [0, 0, 1]


# -- marching cubes ------------------------------------------------------------------

def test_below_iso_is_empty():
    m = marching_cubes(grid(np.full(SPEC.dims, 0.3)), 0.5)
    assert m.is_empty


def test_single_voxel_sphere():
    v = zeros()
    v[2, 1, 3] = 1.0
    m = marching_cubes(grid(v), 0.5)
    assert m.is_watertight()
    assert m.euler_characteristic() == 2
    assert len(m.faces) == 8  # octahedron


def test_full_grid_closed_against_padding():
    m = marching_cubes(grid(np.ones(SPEC.dims)), 0.5)
    assert m.is_watertight()
    assert m.euler_characteristic() == 2


def test_outward_orientation_single_voxel():
    v = zeros()
    v[2, 1, 3] = 1.0
    m = marching_cubes(grid(v), 0.5)
    center = spherical_to_cartesian(*SPEC.center((2, 1, 3)))
    tri = m.vertices[m.faces]
    normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    outward = np.einsum("ij,ij->i", normals, tri.mean(axis=1) - center)
    assert np.all(outward > 0)


def test_vertex_interpolation_on_r_edge():
    v = zeros()
    v[2, 1, 3] = 1.0
    m = marching_cubes(grid(v), 0.25)
    # along the r axis the crossing sits 3/4 of the way to the zero neighbour
    r_expected = SPEC.center((2, 1, 3))[0] + 0.75 * SPEC.r_res
    p = spherical_to_cartesian(r_expected, *SPEC.center((2, 1, 3))[1:])
    assert np.min(np.linalg.norm(m.vertices - p, axis=1)) < 1e-12


def test_degenerate_and_bad_iso():
    flat = GridSpec(1.0, 1.1, 0.1, -20 * DEG, 20 * DEG, 10 * DEG, -30 * DEG, 30 * DEG, 10 * DEG)
    with pytest.raises(ValueError):
        marching_cubes(PowerGrid(np.ones(flat.dims), flat), 0.5)
    with pytest.raises(ValueError):
        marching_cubes(grid(np.ones(SPEC.dims)), 0.0)


def test_two_disjoint_blobs_euler_four():
    v = zeros()
    v[0, 0, 0] = 1.0
    v[5, 3, 5] = 1.0
    m = marching_cubes(grid(v), 0.5)
    assert m.is_watertight() and m.euler_characteristic() == 4


@settings(max_examples=60, deadline=None)
@given(arrays(float, SPEC.dims, elements=st.sampled_from([0.0, 0.2, 0.6, 1.0])),
       st.sampled_from([0.3, 0.5, 0.9]))
def test_watertight_random_grids(v, iso):
    m = marching_cubes(grid(v), iso)
    assert m.is_watertight()


def test_watertight_on_thresholded_random_grids():
    rng = np.random.default_rng(7)
    for _ in range(100):
        v = rng.uniform(0, 1, SPEC.dims) ** 3
        g = threshold_normalize(grid(v), 0.3)
        m = marching_cubes(g, 0.5 * g.values.max())
        assert m.is_watertight()


def test_mesh_validation():
    with pytest.raises(ValueError):
        Mesh(np.zeros((2, 3)), np.array([[0, 1, 2]]))
