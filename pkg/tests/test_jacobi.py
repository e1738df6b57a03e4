import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reconfcheck import oracle
from reconfcheck.families import chain, fixed_arm, wall_cantilever
from reconfcheck.jacobi import (
    FastJacobi, SingularDiagonal, SolverSettings, load_norm, local_systems, local_update, lockstep,
    residual_norm, solve,
)
from reconfcheck.runtime import Runtime

from conftest import scenario_config

# axial shortening of one module under its own weight: -W L / (E A)
SINGLE_UZ = -0.06106 * 9.81 * 0.04 / (100e6 * 0.04**2)


def test_single_module_matches_hand_solution():
    cfg = chain(1)
    res = lockstep(cfg, SolverSettings(), 200)
    assert SINGLE_UZ == pytest.approx(-1.4974965e-7, rel=1e-7)
    assert res.u[0][2] == pytest.approx(SINGLE_UZ, rel=1e-12)
    np.testing.assert_allclose(np.delete(res.u[0], 2), 0, atol=1e-25)


@pytest.mark.parametrize("kw", [dict(beta=0), dict(beta=1.5), dict(gamma=0), dict(gamma=1),
                                dict(max_iterations=0), dict(max_iterations=2.5),
                                dict(tolerance=-1), dict(report_every=-1)])
def test_settings_validation(kw):
    with pytest.raises(ValueError):
        SolverSettings(**kw)


def test_zero_iterate_residual_is_the_load():
    cfg = scenario_config("suite", "pyramid")
    u = {p: np.zeros(6) for p in cfg.ids}
    assert residual_norm(cfg, u) == pytest.approx(load_norm(cfg))
    assert load_norm(cfg) == pytest.approx(cfg.params.weight * np.sqrt(len(cfg.ids)))


@pytest.mark.parametrize("name", ["seesaw", "slab-cantilever", "ring"])
def test_direct_solution_is_a_fixed_point(name):
    cfg = scenario_config("suite", name)
    system = oracle.assemble_and_solve(cfg)
    u = system.displacements()
    assert residual_norm(cfg, u) < 1e-9 * load_norm(cfg)
    for p, ls in local_systems(cfg).items():
        u_new, _, _ = local_update(ls, u[p], [u[q] for q in ls.neighbors], 2 / 3, 1e-4, cfg.params)
        np.testing.assert_allclose(u_new, u[p], rtol=0, atol=1e-9 * np.abs(system.solution).max())


def test_full_step_on_two_nodes_matches_hand_iteration():
    # beta = 1, two stacked modules on a bonded base: compare with D^-1 (F - R u)
    cfg = fixed_arm(3)
    K = oracle.assemble(cfg).stiffness
    F = oracle.assemble(cfg).load
    D = np.diag(K)
    u = np.zeros_like(F)
    for _ in range(5):
        u = (F - (K - np.diag(D)) @ u) / D
    res = lockstep(cfg, SolverSettings(beta=1.0), 5)
    np.testing.assert_allclose(res.vector(cfg.ids), u, rtol=1e-12, atol=1e-25)


@given(st.integers(0, 2**31))
@settings(max_examples=10, deadline=None)
def test_distributed_equals_lockstep(seed):
    cfg = scenario_config("suite", "slab-3x3-virtual")
    s = SolverSettings(max_iterations=40, report_every=7)
    dist = solve(Runtime(cfg, seed=seed), s)
    ref = lockstep(cfg, s)
    assert dist.iterations == 40
    np.testing.assert_array_equal(dist.vector(cfg.ids), ref.vector(cfg.ids))
    for p in cfg.ids:
        np.testing.assert_array_equal(dist.snapshot[p][0], ref.snapshot[p][0])
    assert dist.max_sync_gap <= 1
    assert {k: v.key for k, v in dist.states.items()} == {k: v.key for k, v in ref.states.items()}


def test_message_accounting():
    cfg = scenario_config("suite", "two-towers")
    rt = Runtime(cfg, seed=3)
    res = solve(rt, SolverSettings(max_iterations=30, report_every=10))
    degree_sum = sum(cfg.degree(p) for p in cfg.ids)
    n = len(cfg.real_ids)
    assert rt.trace.count("JacobiState") == 30 * degree_sum
    assert rt.trace.count("Init") == n - 1
    # residual reports at rounds 0, 10, 20 plus the final report
    assert rt.trace.count("AggregateUp", phase="jacobi") == 4 * (n - 1)
    assert [row[0] for row in res.log] == [0, 10, 20]
    assert rt.trace.non_local(cfg) == []


def test_fast_jacobi_matches_lockstep():
    cfg = scenario_config("tipping", "tip1-c")
    s = SolverSettings(beta=0.5)
    ref = lockstep(cfg, s, 300).vector(cfg.ids)
    fast = FastJacobi(cfg, s).run(300)
    np.testing.assert_allclose(fast, ref, rtol=1e-10, atol=1e-12 * np.abs(ref).max())


def test_converges_to_direct_solution():
    cfg = scenario_config("suite", "slab-3x3-virtual")
    ref = oracle.assemble_and_solve(cfg).solution
    u = FastJacobi(cfg, SolverSettings()).run(300)
    assert np.linalg.norm(u - ref) / np.linalg.norm(ref) < 1e-6


def test_auto_stop_halts_all_nodes_together():
    cfg = scenario_config("suite", "cube-2x2x2")
    s = SolverSettings(max_iterations=5000, tolerance=1e-8, report_every=10)
    res = solve(Runtime(cfg, seed=1), s)
    assert res.iterations < 5000
    assert residual_norm(cfg, res.u) <= 1e-8 * cfg.params.weight * np.sqrt(len(cfg.ids)) * 1.01
    assert res.log[-1][1] <= 1e-8 * cfg.params.weight * np.sqrt(len(cfg.ids))


def test_warm_start_from_solution_stays_put():
    cfg = scenario_config("suite", "slab-arm")
    system = oracle.assemble_and_solve(cfg)
    res = solve(Runtime(cfg), SolverSettings(max_iterations=20), u0=system.displacements())
    rel = np.linalg.norm(res.vector(cfg.ids) - system.solution) / np.linalg.norm(system.solution)
    assert rel < 1e-9


def test_singular_diagonal():
    cfg = chain(2)
    ls = local_systems(cfg)[1]
    ls = dataclasses.replace(ls, a_const=np.zeros((6, 6)), d_const=np.zeros(6))
    with pytest.raises(SingularDiagonal):
        local_update(ls, np.zeros(6), [np.zeros(6)], 0.5, 1e-4, cfg.params)


def test_virtual_modules_iterate_like_real_ones():
    real = wall_cantilever(3)
    planned = wall_cantilever(3, virtual=1)
    s = SolverSettings(max_iterations=50)
    a = solve(Runtime(real), s).vector(real.ids)
    b = solve(Runtime(planned), s).vector(planned.ids)
    np.testing.assert_array_equal(a, b)
