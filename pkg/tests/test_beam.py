import numpy as np
import pytest
from hypothesis import given, strategies as st

from reconfcheck.beam import (
    axis_rotation, block_rotation, canonical_stiffness, ground_rotation, oriented_stiffness,
)
from reconfcheck.domain import DIRECTIONS, Params

P = Params()
DIRS = list(DIRECTIONS.values())


def skew(v):
    return np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])


def two_node(direction, params=P):
    """Stiffness of one beam between p (at +d) and q (at origin)."""
    a_pq, b_pq = oriented_stiffness(params, direction)
    a_qp, b_qp = oriented_stiffness(params, tuple(-c for c in direction))
    return np.block([[a_pq, b_pq], [b_qp, a_qp]])


def test_canonical_is_symmetric_and_positive_semidefinite():
    k11, k12 = canonical_stiffness(P)
    np.testing.assert_array_equal(k11, k11.T)
    assert np.all(np.linalg.eigvalsh(k11) > 0)
    k = two_node((0, 0, 1))
    np.testing.assert_allclose(k, k.T, atol=1e-6)
    assert np.linalg.eigvalsh(k).min() > -1e-6 * np.abs(k).max()


def test_axial_and_bending_entries_match_beam_theory():
    k11, _ = canonical_stiffness(P)
    E, L, A, I = P.elastic_modulus, P.edge_length, P.cross_area, P.inertia_x
    assert k11[2, 2] == pytest.approx(E * A / L)
    assert k11[0, 0] == pytest.approx(12 * E * I / L**3)
    assert k11[3, 3] == pytest.approx(4 * E * I / L)


def test_cantilever_tip_deflection():
    # clamped lower end, unit lateral tip load: delta = F L^3 / (3 E I)
    k11, _ = canonical_stiffness(P)
    u = np.linalg.solve(k11, [1.0, 0, 0, 0, 0, 0])
    E, L, I = P.elastic_modulus, P.edge_length, P.inertia_x
    assert u[0] == pytest.approx(L**3 / (3 * E * I))
    assert abs(u[4]) == pytest.approx(L**2 / (2 * E * I))


@pytest.mark.parametrize("d", DIRS)
def test_rotations_are_proper_and_map_z_to_direction(d):
    r = axis_rotation(d)
    np.testing.assert_allclose(r @ r.T, np.eye(3), atol=1e-15)
    assert np.linalg.det(r) == pytest.approx(1.0)
    np.testing.assert_allclose(r @ [0, 0, 1], d)


@pytest.mark.parametrize("d", DIRS)
def test_reversed_coupling_is_transpose(d):
    _, b_pq = oriented_stiffness(P, d)
    _, b_qp = oriented_stiffness(P, tuple(-c for c in d))
    np.testing.assert_allclose(b_qp, b_pq.T, atol=1e-9)


@pytest.mark.parametrize("name", list(DIRECTIONS))
def test_ground_rotation_points_support_along_facet(name):
    r = ground_rotation(name)[:3, :3]
    np.testing.assert_allclose(r @ [0, 0, -1], DIRECTIONS[name])


@given(st.sampled_from(DIRS),
       st.lists(st.floats(-1, 1), min_size=3, max_size=3),
       st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_rigid_motions_produce_no_force(d, t, w):
    L = P.edge_length
    t, w = np.array(t), np.array(w)
    xp = L * np.array(d, dtype=float)
    u = np.concatenate([t + np.cross(w, xp), w, t, w])
    f = two_node(d) @ u
    assert np.abs(f).max() <= 1e-6 * np.abs(two_node(d)).max() * (1 + np.abs(u).max())


@given(st.sampled_from(DIRS), st.floats(1e6, 1e10))
def test_stiffness_is_linear_in_modulus(d, E):
    a1, _ = oriented_stiffness(P, d)
    a2, _ = oriented_stiffness(Params(elastic_modulus=E), d)
    np.testing.assert_allclose(a2, a1 * E / P.elastic_modulus, rtol=1e-12, atol=1e-12)


def test_block_rotation_structure():
    r = axis_rotation((1, 0, 0))
    rh = block_rotation(r)
    np.testing.assert_array_equal(rh[:3, 3:], 0)
    np.testing.assert_array_equal(rh[3:, 3:], r)
