"""Iterations-to-tolerance for parametric families, plus a convergence curve.

Writes <out>/scaling.csv and <out>/convergence-fixed-arm-10.csv and prints
the fitted exponents.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from reconfcheck import oracle
from reconfcheck.families import fixed_arm
from reconfcheck.jacobi import FastJacobi, SolverSettings
from reconfcheck.scaling import exponents, rows_csv, run_scaling


def convergence_curve(n: int, step: int, points: int) -> str:
    cfg = fixed_arm(n)
    ref = oracle.assemble_and_solve(cfg).solution
    fj = FastJacobi(cfg, SolverSettings())
    u = np.zeros_like(ref)
    lines = ["iteration,relative_error"]
    for k in range(1, points + 1):
        u = fj.run(step, u)
        lines.append(f"{k * step},{np.linalg.norm(u - ref) / np.linalg.norm(ref)!r}")
    return "\n".join(lines) + "\n"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--families", nargs="+", default=["fixed-arm", "chain"])
    ap.add_argument("--sizes", default="4-16")
    ap.add_argument("--tolerances", type=float, nargs="+", default=[1e-3, 1e-6])
    args = ap.parse_args()
    a, b = (int(x) for x in args.sizes.split("-"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for fam in args.families:
        fam_rows = run_scaling(fam, range(a, b + 1), args.tolerances)
        rows += fam_rows
        for tol, p in exponents(fam_rows).items():
            print(f"{fam:10s} tol={tol:g} exponent={p:.3f}")
    (out / "scaling.csv").write_text(rows_csv(rows))
    (out / "convergence-fixed-arm-10.csv").write_text(convergence_curve(10, 5000, 40))


if __name__ == "__main__":
    main()
