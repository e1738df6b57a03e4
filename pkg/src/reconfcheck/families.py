"""Parametric configuration families for scaling studies and test suites."""

from __future__ import annotations

from .domain import Configuration, GroundFacet, Module, Params, validate


def _make(cells, facets, centroid=0, virtual=(), params: Params | None = None) -> Configuration:
    mods = [Module(i, tuple(c)) for i, c in enumerate(cells)]
    mods += [Module(len(cells) + j, tuple(c), virtual=True) for j, c in enumerate(virtual)]
    return validate(Configuration(tuple(mods), tuple(facets), centroid, params or Params()))


def fixed_arm(n: int, params: Params | None = None) -> Configuration:
    """Cantilever with a bonded base: a 2-module post and a horizontal arm.

    Module 0 is bonded to the floor; modules 2..n-1 extend along +x at
    the level of module 1. The graph is a path with one grounded end.
    """
    if n < 3:
        raise ValueError("fixed arm needs at least 3 modules")
    cells = [(0, 0, 0), (0, 0, 1)] + [(i, 0, 1) for i in range(1, n - 1)]
    return _make(cells, [GroundFacet(0, "-z", fixed=True)], params=params)


def chain(n: int, params: Params | None = None) -> Configuration:
    """Vertical tower of n modules resting on the floor (unilateral contact)."""
    return _make([(0, 0, i) for i in range(n)], [GroundFacet(0, "-z")], params=params)


def slab(n: int, params: Params | None = None) -> Configuration:
    """n x n single-layer slab lying on the floor, centroid in the middle."""
    cells = [(x, y, 0) for x in range(n) for y in range(n)]
    centroid = (n // 2) * n + n // 2
    return _make(cells, [GroundFacet(i, "-z") for i in range(len(cells))], centroid, params=params)


def wall_cantilever(k: int, params: Params | None = None, virtual: int = 0) -> Configuration:
    """An anchor module bonded to a wall (-x face) with k lateral modules.

    The last ``virtual`` of the k arm modules are planned (virtual).
    """
    real = [(i, 0, 0) for i in range(k + 1 - virtual)]
    planned = [(i, 0, 0) for i in range(k + 1 - virtual, k + 1)]
    return _make(real, [GroundFacet(0, "-x", fixed=True)], virtual=planned, params=params)


def tower_overhang(height: int, overhang: int, params: Params | None = None, virtual: int = 0) -> Configuration:
    """A column on one grounded module with a horizontal overhang at the top."""
    cells = [(0, 0, z) for z in range(height)] + [(i, 0, height - 1) for i in range(1, overhang + 1)]
    real = cells[:len(cells) - virtual]
    planned = cells[len(cells) - virtual:]
    return _make(real, [GroundFacet(0, "-z")], virtual=planned, params=params)


FAMILIES = {"fixed-arm": fixed_arm, "chain": chain, "slab": slab}
