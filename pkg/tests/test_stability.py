import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reconfcheck import oracle
from reconfcheck.contact import CONTACT, SEPARATION, STABLE, TILT_POS, ContactState
from reconfcheck.domain import Configuration, GroundFacet, Module, validate
from reconfcheck.families import chain, wall_cantilever
from reconfcheck.runtime import Runtime
from reconfcheck.stability import (
    TWO_PI, CenterOfMass, SafeAngleRange, SolverNotRun, SupportSet, center_of_mass, corner_range,
    model_based_stability, reduce_points, simplified_stability, support_set,
)
from reconfcheck.tree import build_tree

from conftest import scenario_config

L = 0.04
TIPPING = ["tip1-b", "tip1-c", "tip2-b", "tip2-c", "tip3-b", "tip3-c", "marginal"]


def make(cells, virtual=()):
    mods = [Module(i, c) for i, c in enumerate(cells)]
    mods += [Module(len(cells) + j, c, True) for j, c in enumerate(virtual)]
    facets = [GroundFacet(m.id, "-z") for m in mods if m.pos[2] == 0]
    return validate(Configuration(tuple(mods), tuple(facets), 0))


@st.composite
def structures(draw):
    """Random connected lattice structures grown from one ground cell."""
    cells = [(0, 0, 0)]
    for _ in range(draw(st.integers(0, 7))):
        base = draw(st.sampled_from(cells))
        d = draw(st.sampled_from([(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]))
        c = tuple(a + b for a, b in zip(base, d))
        if c[2] >= 0 and c not in cells:
            cells.append(c)
    return make(cells)


def test_center_of_mass_of_l_shape():
    cfg = make([(0, 0, 0), (1, 0, 0), (0, 1, 0)])
    com = center_of_mass(cfg)
    assert (com.X, com.Y, com.Z) == pytest.approx((L / 3, L / 3, L / 2))
    rt = Runtime(cfg, seed=2)
    dist = center_of_mass(cfg, rt, build_tree(rt))
    assert (dist.X, dist.Y, dist.Z) == pytest.approx((com.X, com.Y, com.Z), abs=1e-15)
    assert dist.total_mass == pytest.approx(3 * cfg.params.mass)


def test_center_of_mass_counts_virtual_modules():
    cfg = make([(0, 0, 0)], virtual=[(1, 0, 0)])
    assert center_of_mass(cfg).X == pytest.approx(L / 2)


arcs = st.tuples(st.floats(-10, 10), st.floats(0, 7)).map(lambda a: SafeAngleRange.arc(*a))


@given(arcs, arcs, arcs)
def test_union_is_commutative_and_associative(a, b, c):
    assert a | b == b | a
    assert (a | b) | c == a | (b | c)
    assert a | SafeAngleRange.empty() == a
    assert (a | SafeAngleRange.full()).is_full


@given(st.floats(-10, 10), st.floats(0.01, 6.2), st.floats(0, 1))
def test_arc_contains_its_interior(start, extent, t):
    r = SafeAngleRange.arc(start, extent)
    assert r.contains(start + t * extent)
    s, e = r.as_start_extent()
    assert e == pytest.approx(extent)


@given(st.floats(-1, 1), st.floats(-1, 1))
def test_corner_range_is_a_half_circle(x, y):
    r = corner_range((x, y), CenterOfMass(0.0, 0.0, 0.0, 1.0))
    if x == 0 and y == 0:
        assert r.is_empty
        return
    _, extent = r.as_start_extent()
    assert extent == pytest.approx(math.pi)
    assert r.contains(math.atan2(y, x))
    assert not r.contains(math.atan2(y, x) + math.pi)


def test_opposite_half_circles_cover_everything():
    com = CenterOfMass(0.0, 0.0, 0.0, 1.0)
    assert (corner_range((1, 0), com) | corner_range((-1, 0), com)).is_full


@given(structures(), st.integers(0, 1000))
@settings(max_examples=60, deadline=None)
def test_simplified_check_agrees_with_hull(cfg, seed):
    hull = oracle.convex_hull_oracle(cfg)
    direct = simplified_stability(cfg)
    rt = Runtime(cfg, seed=seed)
    dist = simplified_stability(cfg, rt, build_tree(rt))
    assert (dist.verdict, dist.marginal) == (direct.verdict, direct.marginal)
    expected = {"stable": ("stable", False), "marginal": ("stable", True), "unstable": ("unstable", False)}
    assert (direct.verdict, direct.marginal) == expected[hull]


@pytest.mark.parametrize("name", TIPPING)
def test_model_based_with_exact_states_agrees_with_hull(name):
    cfg = scenario_config("tipping", name)
    states = oracle.assemble_and_solve(cfg).states
    model = model_based_stability(cfg, states)
    hull = oracle.convex_hull_oracle(cfg)
    assert model.stable == (hull != "unstable")
    assert model.marginal == (hull == "marginal")



def test_simplified_rejects_non_flat_ground():
    with pytest.raises(oracle.NotFlatGround):
        simplified_stability(wall_cantilever(2))


def test_reduce_points_rules():
    a, b, c = (0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (2.0, 0.0, 0.0)
    assert reduce_points([a]) == SupportSet(False, (a,))
    assert reduce_points([a, b, c]) == SupportSet(False, (a, c))
    assert reduce_points([a, b, (0.0, 1.0, 0.0)]).stable
    assert SupportSet(True).merge(SupportSet()).stable


def test_support_set_from_states():
    cfg = chain(1)
    tilt = ContactState(CONTACT, STABLE, TILT_POS, 0.0, 1.0, -1.0)
    s, marginal = support_set(cfg, 0, {(0, "-z"): tilt})
    assert not s.stable and not marginal
    assert sorted(p[0] for p in s.points) == [pytest.approx(L / 2)] * 2
    s, _ = support_set(cfg, 0, {(0, "-z"): ContactState(SEPARATION)})
    assert s == SupportSet()
    s, _ = support_set(cfg, 0, {(0, "-z"): ContactState()})
    assert s.stable


def test_near_boundary_tilt_is_marginal():
    cfg = chain(1)
    tilt = ContactState(CONTACT, STABLE, TILT_POS, 0.0, 1e-9, -1.0)
    s, marginal = support_set(cfg, 0, {(0, "-z"): tilt}, marginal_tol=1e-4)
    assert s.stable and marginal


def test_model_based_needs_states():
    cfg = chain(2)
    with pytest.raises(SolverNotRun):
        model_based_stability(cfg, None)
    with pytest.raises(SolverNotRun):
        model_based_stability(cfg, {})


def test_model_based_distributed_matches_direct():
    cfg = scenario_config("suite", "seesaw")
    states = oracle.assemble_and_solve(cfg).states
    rt = Runtime(cfg, seed=9)
    a = model_based_stability(cfg, states, rt, build_tree(rt))
    b = model_based_stability(cfg, states)
    assert a.to_dict() == b.to_dict()
    assert rt.trace.count(phase="model-based") == len(cfg.real_ids) - 1
