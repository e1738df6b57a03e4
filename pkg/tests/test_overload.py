import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reconfcheck import oracle
from reconfcheck.beam import rotation_for
from reconfcheck.domain import Params
from reconfcheck.families import fixed_arm, tower_overhang, wall_cantilever
from reconfcheck.overload import (
    CSV_HEADER, OverloadSummary, aggregate_verdict, check_all, combine_summaries,
    mid_connection_wrench, reports_csv, summarize, utilization,
)
from reconfcheck.runtime import Runtime
from reconfcheck.tree import build_tree

W = 0.06106 * 9.81


def solved(cfg):
    return oracle.assemble_and_solve(cfg).displacements()


def root_utilization(k):
    # lateral arm of k blocks, moment at the anchor joint: W L k^2 / 2
    return W * k**2 / 14.97


@pytest.mark.parametrize("k, frozen", [(4, 0.64021), (5, 1.00033), (6, 1.44048)])
def test_statics_utilization_values(k, frozen):
    assert root_utilization(k) == pytest.approx(frozen, abs=5e-6)


@pytest.mark.parametrize("k", [2, 4, 6])
def test_cantilever_utilization_matches_statics(k):
    cfg = wall_cantilever(k)
    reports = check_all(cfg, solved(cfg))
    root = next(r for r in reports if r.pair == (0, 1))
    assert root.orientation == "lateral"
    assert root.utilization == pytest.approx(root_utilization(k), rel=1e-2)
    assert max(r.utilization for r in reports) == root.utilization
    assert root.breached == (k >= 5)


@pytest.mark.parametrize("cfg", [wall_cantilever(5), fixed_arm(7), tower_overhang(3, 1)],
                         ids=["wall", "fixed-arm", "tower"])
def test_mid_connection_wrenches_match_rigid_statics(cfg):
    u = solved(cfg)
    statics = oracle.statics_oracle(cfg)
    for (p, q), ref in statics.items():
        w = mid_connection_wrench(cfg, p, q, u[p], u[q])
        scale = np.abs(ref[:5]).max()
        np.testing.assert_allclose(w[:5], ref[:5], rtol=0, atol=1e-2 * scale)


@given(st.floats(1e6, 1e11))
@settings(max_examples=10, deadline=None)
def test_determinate_wrenches_do_not_depend_on_modulus(E):
    base = wall_cantilever(3)
    cfg = base.with_params(Params(elastic_modulus=E))
    a = check_all(base, solved(base))
    b = check_all(cfg, solved(cfg))
    for ra, rb in zip(a, b):
        np.testing.assert_allclose(rb.wrench, ra.wrench, rtol=1e-6, atol=1e-9)


def test_action_reaction():
    cfg = fixed_arm(5)
    u = solved(cfg)
    for p, q in cfg.connections:
        w_pq = rotation_for(cfg, p, q) @ mid_connection_wrench(cfg, p, q, u[p], u[q])
        w_qp = rotation_for(cfg, q, p) @ mid_connection_wrench(cfg, q, p, u[q], u[p])
        np.testing.assert_allclose(w_pq, -w_qp, atol=1e-12)


def test_utilization_formula():
    p = Params()
    w = np.array([0, 0, 1.0, 0.02, -0.05, 0])
    assert utilization(w, p, vertical=True) == pytest.approx((2 * 0.05 / 0.04 + 1.0) / 11.98)
    assert utilization(w, p, vertical=False) == pytest.approx((2 * 0.05 / 0.04 + 1.0) / 14.97)


summaries = st.builds(
    lambda u, b, w: OverloadSummary(u, b, w if b else None),
    st.floats(-10, 10), st.integers(0, 3), st.tuples(st.integers(0, 9), st.integers(10, 19)))


@given(summaries, summaries, summaries)
def test_combine_is_associative_and_commutative(a, b, c):
    assert combine_summaries(a, b) == combine_summaries(b, a)
    assert combine_summaries(combine_summaries(a, b), c) == combine_summaries(a, combine_summaries(b, c))


@given(st.integers(0, 2**31))
@settings(max_examples=20, deadline=None)
def test_aggregate_verdict_is_schedule_independent(seed):
    cfg = wall_cantilever(6, virtual=1)
    u = solved(cfg)
    snaps = {p: (u[p], {q: u[q] for q in cfg.neighbors[p]}) for p in cfg.ids}
    direct = aggregate_verdict(cfg, snaps)
    rt = Runtime(cfg, seed=seed)
    dist = aggregate_verdict(cfg, snaps, rt, build_tree(rt))
    assert dist.summary == direct.summary
    assert dist.summary.witness == (0, 1)
    assert dist.summary.breaches == 2
    assert direct.flagged[0] and direct.flagged[1] and not direct.flagged[6]


def test_single_module_summary_serializes():
    assert summarize([]).to_dict() == {"max_utilization": None, "breaches": 0, "witness": None}


def test_reports_csv():
    cfg = wall_cantilever(3)
    text = reports_csv(check_all(cfg, solved(cfg)))
    lines = text.strip().split("\n")
    assert lines[0].split(",") == CSV_HEADER
    assert len(lines) == 1 + len(cfg.connections)
    assert lines[1].startswith("0,1,lateral,")
