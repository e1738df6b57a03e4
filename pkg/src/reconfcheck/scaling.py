"""Iterations needed to reach given relative errors, per family size."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .families import FAMILIES
from .jacobi import FastJacobi, SolverSettings
from .oracle import assemble_and_solve


@dataclass(frozen=True)
class ScalingRow:
    family: str
    size: int
    tolerance: float
    iterations: int | None


def iterations_for(config, settings: SolverSettings, tolerances, max_iterations: int = 5_000_000,
                   check_every: int = 10) -> dict[float, int | None]:
    reference = assemble_and_solve(config, gamma=settings.gamma).solution
    return FastJacobi(config, settings).iterations_to(reference, tolerances, max_iterations, check_every)


def run_scaling(family: str, sizes, tolerances, settings: SolverSettings | None = None,
                max_iterations: int = 5_000_000, check_every: int = 10) -> list[ScalingRow]:
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}")
    settings = settings or SolverSettings()
    rows = []
    for n in sizes:
        its = iterations_for(FAMILIES[family](n), settings, tolerances, max_iterations, check_every)
        rows += [ScalingRow(family, n, t, its[t]) for t in sorted(tolerances, reverse=True)]
    return rows


def fit_exponent(sizes, iterations) -> float | None:
    """Slope of log(iterations) against log(size); None with fewer than 2 points."""
    pts = [(n, k) for n, k in zip(sizes, iterations) if k]
    if len(pts) < 2:
        warnings.warn("fewer than two data points, no exponent fitted", stacklevel=2)
        return None
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])


def exponents(rows: list[ScalingRow]) -> dict[float, float | None]:
    out = {}
    for t in sorted({r.tolerance for r in rows}, reverse=True):
        sel = [r for r in rows if r.tolerance == t]
        out[t] = fit_exponent([r.size for r in sel], [r.iterations for r in sel])
    return out


def rows_csv(rows: list[ScalingRow]) -> str:
    lines = ["family,size,tolerance,iterations"]
    lines += [f"{r.family},{r.size},{r.tolerance!r},{'' if r.iterations is None else r.iterations}" for r in rows]
    return "\n".join(lines) + "\n"
