"""Regenerate the scenario corpus under scenarios/.

Each configuration gets beta = 2/3 unless the largest eigenvalue of
D^-1 K exceeds 2.9, where beta = 1/2 keeps the iteration contractive.
Suite budgets are 1.3x the lockstep iterations needed for 1e-7 relative
error against the direct solve.
"""

from __future__ import annotations

import argparse
import math
from pathlib import Path

import numpy as np

from reconfcheck import oracle
from reconfcheck.domain import Configuration, GroundFacet, Module, validate
from reconfcheck.families import chain, wall_cantilever
from reconfcheck.jacobi import FastJacobi, SolverSettings
from reconfcheck.scenario import dump, from_configuration

ROOT = Path(__file__).resolve().parent.parent / "scenarios"


def mk(real, virtual=(), centroid=0) -> Configuration:
    cells = list(real) + list(virtual)
    mods = [Module(i, tuple(c)) for i, c in enumerate(real)]
    mods += [Module(len(real) + j, tuple(c), True) for j, c in enumerate(virtual)]
    facets = [GroundFacet(i, "-z") for i, c in enumerate(cells) if c[2] == 0]
    return validate(Configuration(tuple(mods), tuple(facets), centroid))


def grid(nx, ny, z=0, x0=0, y0=0):
    return [(x0 + x, y0 + y, z) for x in range(nx) for y in range(ny)]


COL = [(0, 0, 0), (0, 0, 1), (0, 0, 2)]
TIP3 = [(0, 0, 0), (0, 1, 0), (0, 0, 1), (0, 1, 1), (1, 0, 1), (1, 1, 1), (1, 0, 2), (1, 1, 2)]

SUITE = {
    "slab-3x3-virtual": (mk(grid(3, 3), [(1, 1, 1)]), "3x3 slab with one planned module on top"),
    "cube-2x2x2": (mk(grid(2, 2) + grid(2, 2, 1)), "two-layer 2x2 block"),
    "tower-2x2x3": (mk(grid(2, 2) + grid(2, 2, 1) + grid(2, 2, 2), [(2, 0, 2)]), "2x2 tower with a planned side module"),
    "pyramid": (mk(grid(3, 3) + grid(2, 2, 1) + [(0, 0, 2)], [(1, 1, 2)]), "stepped pyramid"),
    "slab-4x4-pillar": (mk(grid(4, 4) + grid(2, 2, 1, 1, 1), [(1, 1, 2), (2, 2, 2)], 5), "4x4 slab carrying a 2x2 pillar"),
    "wall-4x1x3": (mk(grid(4, 1) + grid(4, 1, 1) + grid(4, 1, 2), [(4, 0, 2)]), "planar wall with a planned overhang"),
    "slab-arm": (mk(grid(3, 3) + [(1, 1, 1), (2, 1, 1)], [(3, 1, 1)], 4), "slab with a short lateral arm"),
    "slab-arm-high": (mk(grid(3, 3) + [(1, 1, 1), (1, 1, 2), (2, 1, 2)], [(3, 1, 2)], 4), "slab with a raised cantilever"),
    "slab-5x5-virtual": (mk(grid(5, 5), [(2, 2, 1), (1, 2, 1), (3, 2, 1)], 12), "5x5 slab with three planned modules"),
    "two-towers": (mk(grid(3, 1) + [(0, 0, 1), (2, 0, 1), (0, 0, 2), (2, 0, 2), (1, 0, 2)], [(1, 0, 3)]), "arch of two towers"),
    "staircase": (mk(grid(3, 2) + grid(2, 2, 1) + grid(1, 2, 2), [(0, 0, 3)], 2), "three-step staircase"),
    "ring": (mk(grid(3, 3) + [(0, 0, 1), (0, 1, 1), (0, 2, 1), (1, 2, 1), (2, 2, 1), (2, 1, 1), (2, 0, 1), (1, 0, 1)],
                [(0, 0, 2), (1, 0, 2)], 4), "slab with a closed ring on top"),
    "slab-cantilever": (mk(grid(2, 4) + [(0, 0, 1), (0, 1, 1), (-1, 0, 1)], [(-2, 0, 1)], 2), "slab with an outward cantilever"),
    "seesaw": (mk(grid(4, 1) + [(3, 0, 1), (4, 0, 1), (5, 0, 1)], [(6, 0, 1)], 2), "row whose far end lifts off"),
}

TIPPING = {
    "tip1-b": (mk(COL, [(1, 0, 2)]), "planar column, one-block overhang planned (safe)"),
    "tip1-c": (mk(COL + [(1, 0, 2)], [(2, 0, 2)]), "planar column, second overhang block planned (tips)"),
    "tip2-b": (mk(COL, [(1, 0, 2), (0, 1, 2)]), "column with arms along x and y planned (safe)"),
    "tip2-c": (mk(COL + [(1, 0, 2), (0, 1, 2)], [(2, 0, 2), (0, 2, 2), (1, 1, 2), (1, 0, 1)]), "arms extended (tips)"),
    "tip3-b": (mk(TIP3, [(0, 0, 2), (0, 1, 2)]), "looped frame on two supports (safe)"),
    "tip3-c": (mk(TIP3 + [(0, 0, 2), (0, 1, 2)], [(2, 0, 2), (2, 1, 2), (2, 0, 1)]), "looped frame with overhang (tips)"),
    "marginal": (mk([(0, 0, 0), (0, 0, 1), (1, 0, 1)], [(1, 0, 2)]), "center of mass exactly above a support edge"),
}
TIPPING_BUDGET = {"tip1": 4000, "tip2": 15000, "tip3": 6000, "marginal": 15000}


def choose_beta(config: Configuration) -> float:
    system = oracle.assemble_and_solve(config)
    k = oracle.assemble(config, system.states).stiffness
    lam = np.linalg.eigvals(k / np.diag(k)[:, None]).real.max()
    return 2 / 3 if lam < 2.9 else 0.5


def suite_budget(config: Configuration, beta: float) -> int:
    ref = oracle.assemble_and_solve(config).solution
    its = FastJacobi(config, SolverSettings(beta=beta)).iterations_to(ref, [1e-7], 1_000_000)[1e-7]
    return max(300, int(math.ceil(1.3 * its / 100.0)) * 100)


def write(path: Path, config, name, description, settings, simplified=False):
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = from_configuration(config, name, settings, simplified, description)
    path.write_text(dump(doc))
    print(path.relative_to(ROOT.parent), settings.max_iterations, round(settings.beta, 4))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--only", choices=("suite", "tipping", "overload", "basic"))
    args = ap.parse_args()
    if args.only in (None, "suite"):
        for name, (cfg, desc) in SUITE.items():
            beta = choose_beta(cfg)
            write(ROOT / "suite" / f"{name}.yaml", cfg, name, desc,
                  SolverSettings(beta=beta, max_iterations=suite_budget(cfg, beta)))
    if args.only in (None, "tipping"):
        for name, (cfg, desc) in TIPPING.items():
            budget = TIPPING_BUDGET[name.split("-")[0]]
            beta = 0.5 if name.startswith(("tip2", "marginal", "tip1")) else choose_beta(cfg)
            write(ROOT / "tipping" / f"{name}.yaml", cfg, name, desc,
                  SolverSettings(beta=beta, max_iterations=budget), simplified=True)
    if args.only in (None, "overload"):
        write(ROOT / "overload" / "cantilever-4.yaml", wall_cantilever(4, virtual=1), "cantilever-4",
              "wall anchor with a 4-block arm, last block planned", SolverSettings(max_iterations=30000))
        write(ROOT / "overload" / "cantilever-6.yaml", wall_cantilever(6, virtual=1), "cantilever-6",
              "wall anchor with a 6-block arm, last block planned", SolverSettings(max_iterations=40000))
    if args.only in (None, "basic"):
        single = mk([(0, 0, 0)])
        write(ROOT / "basic" / "single.yaml", single, "single", "one module on the floor",
              SolverSettings(max_iterations=200))
        write(ROOT / "basic" / "chain-8.yaml", chain(8), "chain-8", "tower of eight modules",
              SolverSettings(max_iterations=suite_budget(chain(8), 2 / 3)))
        write(ROOT / "basic" / "tower-overhang.yaml", TIPPING["tip1-c"][0], "tower-overhang",
              "column of three with a two-block overhang, the second block planned",
              SolverSettings(beta=0.5, max_iterations=4000))


if __name__ == "__main__":
    main()
