"""End-to-end check of one reconfiguration step.

Stages: build configuration, assign virtual modules, build the tree,
optional simplified stability, Jacobi solve, model-based stability,
overload check, final Verdict broadcast, report.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .domain import Configuration
from .jacobi import JacobiResult, SolverSettings, solve
from .overload import OverloadResult, aggregate_verdict
from .runtime import ExecutionTrace, Runtime
from .scenario import ScenarioDoc, build_configuration
from .stability import StabilityVerdict, model_based_stability, simplified_stability
from .tree import broadcast, build_tree

EXIT_SAFE, EXIT_UNSTABLE, EXIT_OVERLOAD, EXIT_BOTH = 0, 2, 3, 4

# per-iteration duration measured on the hardware; reported, never simulated
HARDWARE_SECONDS_PER_ITERATION = 0.1105


def exit_code(stable: bool, overloaded: bool) -> int:
    if stable and not overloaded:
        return EXIT_SAFE
    if not stable and not overloaded:
        return EXIT_UNSTABLE
    if stable:
        return EXIT_OVERLOAD
    return EXIT_BOTH


def _f(x):
    return None if x is None else float(x)


@dataclass
class RunReport:
    scenario: str
    seed: int
    settings: dict
    stability: dict
    stability_checks: list[dict]
    overload: dict
    stable: bool
    overloaded: bool
    exit_code: int
    iterations: int
    last_state_change: int
    connections: list[dict]
    contact_states: list[dict]
    module_flags: dict[str, list[str]]
    messages: dict
    tree: dict
    convergence: list[list]
    hardware_time_s: float
    wall_time_s: float = 0.0
    verify: dict | None = None

    def to_dict(self, timing: bool = False) -> dict:
        d = dataclasses.asdict(self)
        if not timing:
            d.pop("wall_time_s")
        if d["verify"] is None:
            d.pop("verify")
        return d

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True) + "\n"


@dataclass
class RunOutcome:
    report: RunReport
    config: Configuration
    trace: ExecutionTrace
    jacobi: JacobiResult
    overload: OverloadResult
    checks: list[StabilityVerdict] = field(default_factory=list)


def run_check(doc: ScenarioDoc, seed: int = 0, settings: SolverSettings | None = None,
              simplified: bool | None = None, fidelity: bool = False, verify: bool = False,
              policy: str = "random") -> RunOutcome:
    t0 = time.perf_counter()
    config = build_configuration(doc)
    settings = settings or doc.settings()
    use_simplified = doc.simplified_stability if simplified is None else simplified
    rt = Runtime(config, seed=seed, policy=policy, fidelity=fidelity)
    tree = build_tree(rt)

    checks = []
    if use_simplified:
        checks.append(simplified_stability(config, rt, tree))
    jac = solve(rt, settings, tree)
    model = model_based_stability(config, jac.states, rt, tree)
    checks.append(model)
    chosen = checks[0]
    ov = aggregate_verdict(config, jac.snapshot, rt, tree)
    stable = chosen.stable
    overloaded = ov.summary.overloaded
    broadcast(rt, tree, (stable, overloaded), kind="Verdict", phase="verdict")

    flags: dict[str, list[str]] = {}
    for p, bad in sorted(ov.flagged.items()):
        if bad:
            flags.setdefault(str(p), []).append("overload")
    if not stable:
        flags.setdefault(str(config.centroid), []).append("unstable")

    trace = rt.trace
    report = RunReport(
        scenario=doc.id,
        seed=seed,
        settings=dataclasses.asdict(settings) | {"fidelity": fidelity, "policy": rt.policy},
        stability=chosen.to_dict(),
        stability_checks=[c.to_dict() for c in checks],
        overload=ov.summary.to_dict(),
        stable=stable,
        overloaded=overloaded,
        exit_code=exit_code(stable, overloaded),
        iterations=jac.iterations,
        last_state_change=jac.last_change,
        connections=[{
            "p": r.pair[0], "q": r.pair[1], "orientation": r.orientation,
            "f_z": float(r.wrench[2]), "m_x": float(r.wrench[3]), "m_y": float(r.wrench[4]),
            "utilization": r.utilization, "breached": r.breached,
        } for r in ov.reports],
        contact_states=[{
            "module": k[0], "facet": k[1], "normal": s.normal, "tilt_x": s.tilt_x, "tilt_y": s.tilt_y,
        } for k, s in sorted(jac.states.items())],
        module_flags=flags,
        messages={
            "by_kind": trace.totals_by_kind(),
            "by_phase": trace.totals_by_phase(),
            "total": len(trace.records),
            "internal": trace.count(internal=True),
            "frames": trace.frames_total(),
            "max_sync_gap": trace.max_sync_gap,
        },
        tree={"root": tree.root, "height": tree.height, "logical_nodes": tree.logical_count},
        convergence=[[i, r, c] for i, r, c in jac.log],
        hardware_time_s=round(jac.iterations * HARDWARE_SECONDS_PER_ITERATION, 6),
    )
    if verify:
        report.verify = verify_against_oracle(config, settings, jac, checks)
    report.wall_time_s = time.perf_counter() - t0
    return RunOutcome(report, config, trace, jac, ov, checks)


def verify_against_oracle(config: Configuration, settings: SolverSettings, jac: JacobiResult, checks) -> dict:
    """Oracle deltas appended to a report; never changes verdicts."""
    out: dict = {}
    try:
        system = oracle.assemble_and_solve(config, gamma=settings.gamma)
    except oracle.NoFixedPoint as exc:
        out["oracle"] = f"no fixed point: {exc}"
        return out
    u = jac.vector(system.ids)
    out["relative_error"] = float(np.linalg.norm(u - system.solution) / np.linalg.norm(system.solution))
    out["classification_agrees"] = {k: s.key for k, s in system.states.items()} == {k: s.key for k, s in jac.states.items()}
    try:
        out["spectral_radius"] = oracle.spectral_radius(config, settings.beta, system.states, settings.gamma)
    except oracle.DimensionTooLarge:
        out["spectral_radius"] = None
    try:
        out["hull_oracle"] = oracle.convex_hull_oracle(config)
    except oracle.NotFlatGround:
        out["hull_oracle"] = None
    return out
