"""Lattice, module identities, physical parameters and configurations.

Modules sit on a cubic grid. A module with grid cell ``(x, y, z)`` has its
center node at ``L * (x, y, z + 1/2)`` so that the bottom faces of the
``z = 0`` layer lie in the ground plane ``z = 0``.

Kinematic states (Dof6) and force/torque vectors (Wrench6) are plain
``numpy`` arrays of shape ``(6,)`` ordered ``(x, y, z, rx, ry, rz)``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

Dof6 = np.ndarray
Wrench6 = np.ndarray

DIRECTIONS: dict[str, tuple[int, int, int]] = {
    "+x": (1, 0, 0),
    "-x": (-1, 0, 0),
    "+y": (0, 1, 0),
    "-y": (0, -1, 0),
    "+z": (0, 0, 1),
    "-z": (0, 0, -1),
}

_EDGE = 0.04


class ConfigurationError(ValueError):
    pass


class DisconnectedStructure(ConfigurationError):
    pass


class DuplicatePosition(ConfigurationError):
    pass


class OrphanVirtualModule(ConfigurationError):
    pass


class BadGroundFacet(ConfigurationError):
    pass


class UnknownModule(KeyError):
    pass


class NotAdjacent(ValueError):
    pass


@dataclass(frozen=True)
class Params:
    """Geometric and material constants of a cubic module (SI units).

    Defaults are the Blinky Blocks values: E = 100 MPa, L = 40 mm,
    A = L^2, I = L^4/12, scaled torsion constant 2.25 L^4 / 41.6,
    M = 61.06 g, connection strengths 11.98 N (vertical) and 14.97 N
    (lateral).
    """

    elastic_modulus: float = 100e6
    edge_length: float = _EDGE
    cross_area: float = _EDGE**2
    inertia_x: float = _EDGE**4 / 12
    inertia_y: float = _EDGE**4 / 12
    torsion_scaled: float = 2.25 * _EDGE**4 / 41.6
    mass: float = 0.06106
    strength_vertical: float = 11.98
    strength_lateral: float = 14.97
    gravity: float = 9.81

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name == "gravity":
                if not (np.isfinite(value) and value >= 0):
                    raise ValueError(f"gravity must be finite and >= 0, got {value!r}")
            elif not (np.isfinite(value) and value > 0):
                raise ValueError(f"{f.name} must be finite and > 0, got {value!r}")

    @classmethod
    def for_edge(cls, edge_length: float, **overrides) -> "Params":
        """Parameters whose section constants follow a non-default edge length."""
        L = edge_length
        base = dict(
            edge_length=L,
            cross_area=L**2,
            inertia_x=L**4 / 12,
            inertia_y=L**4 / 12,
            torsion_scaled=2.25 * L**4 / 41.6,
        )
        base.update(overrides)
        return cls(**base)

    @property
    def weight(self) -> float:
        return self.mass * self.gravity

    @property
    def axial_stiffness(self) -> float:
        return self.elastic_modulus * self.cross_area / self.edge_length


@dataclass(frozen=True, order=True)
class Module:
    id: int
    pos: tuple[int, int, int]
    virtual: bool = False


@dataclass(frozen=True, order=True)
class GroundFacet:
    """A module face flush with an immobile support.

    ``fixed`` facets are bonded to the support (bilateral, no contact
    correction); plain facets obey the unilateral contact model.
    """

    module: int
    direction: str
    fixed: bool = False

    @property
    def normal(self) -> tuple[int, int, int]:
        return DIRECTIONS[self.direction]


@dataclass(frozen=True)
class Configuration:
    modules: tuple[Module, ...]
    ground_facets: tuple[GroundFacet, ...]
    centroid: int
    params: Params = field(default_factory=Params)
    neighbors: dict[int, tuple[int, ...]] = field(default=None, compare=False, repr=False)
    connections: tuple[tuple[int, int], ...] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        by_id = {m.id: m for m in self.modules}
        by_pos = {m.pos: m.id for m in self.modules}
        nbrs: dict[int, list[int]] = {m.id: [] for m in self.modules}
        conns = []
        for m in self.modules:
            for d in DIRECTIONS.values():
                other = by_pos.get(_add(m.pos, d))
                if other is not None:
                    nbrs[m.id].append(other)
                    if m.id < other:
                        conns.append((m.id, other))
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_by_pos", by_pos)
        object.__setattr__(self, "neighbors", {k: tuple(sorted(v)) for k, v in nbrs.items()})
        object.__setattr__(self, "connections", tuple(sorted(conns)))

    def module(self, p: int) -> Module:
        try:
            return self._by_id[p]
        except KeyError:
            raise UnknownModule(p) from None

    def at(self, pos) -> int | None:
        return self._by_pos.get(tuple(pos))

    @property
    def ids(self) -> list[int]:
        return sorted(self._by_id)

    @property
    def real_ids(self) -> list[int]:
        return sorted(m.id for m in self.modules if not m.virtual)

    @property
    def virtual_ids(self) -> list[int]:
        return sorted(m.id for m in self.modules if m.virtual)

    def is_virtual(self, p: int) -> bool:
        return self.module(p).virtual

    def center(self, p: int) -> np.ndarray:
        x, y, z = self.module(p).pos
        return self.params.edge_length * np.array([x, y, z + 0.5])

    def facets_of(self, p: int) -> list[GroundFacet]:
        return [f for f in self.ground_facets if f.module == p]

    def direction(self, p: int, q: int) -> tuple[int, int, int]:
        """Unit lattice vector pointing from q to p."""
        d = tuple(a - b for a, b in zip(self.module(p).pos, self.module(q).pos))
        if sum(abs(c) for c in d) != 1:
            raise NotAdjacent((p, q))
        return d

    def is_vertical(self, p: int, q: int) -> bool:
        return self.direction(p, q)[2] != 0

    def degree(self, p: int) -> int:
        return len(self.neighbors[p])

    def real_neighbors(self, p: int) -> tuple[int, ...]:
        return tuple(q for q in self.neighbors[p] if not self._by_id[q].virtual)

    def with_params(self, params: Params) -> "Configuration":
        return Configuration(self.modules, self.ground_facets, self.centroid, params)


def _add(a, b):
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def _components(nodes: Iterable[int], adjacency) -> list[set[int]]:
    nodes = set(nodes)
    seen: set[int] = set()
    comps = []
    for start in sorted(nodes):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            p = stack.pop()
            for q in adjacency[p]:
                if q in nodes and q not in comp:
                    comp.add(q)
                    stack.append(q)
        seen |= comp
        comps.append(comp)
    return comps


def validate(config: Configuration) -> Configuration:
    """Check the structural invariants of a configuration, raising on violation."""
    ids = [m.id for m in config.modules]
    if len(set(ids)) != len(ids):
        raise DuplicatePosition(f"duplicate module ids: {sorted(i for i in ids if ids.count(i) > 1)}")
    positions = [m.pos for m in config.modules]
    if len(set(positions)) != len(positions):
        dup = sorted({p for p in positions if positions.count(p) > 1})
        raise DuplicatePosition(f"several modules at {dup}")
    real = config.real_ids
    if not real:
        raise DisconnectedStructure("no real modules")
    comps = _components(real, config.neighbors)
    if len(comps) != 1:
        raise DisconnectedStructure(f"real modules form {len(comps)} components: {[sorted(c) for c in comps]}")
    for v in config.virtual_ids:
        if not config.real_neighbors(v):
            raise OrphanVirtualModule(f"virtual module {v} has no real neighbor")
    if config.centroid not in config._by_id or config.is_virtual(config.centroid):
        raise ConfigurationError(f"centroid {config.centroid} is not a real module")
    planes: dict[str, int] = {}
    seen = set()
    for f in config.ground_facets:
        if f.module not in config._by_id:
            raise BadGroundFacet(f"ground facet on unknown module {f.module}")
        if f.direction not in DIRECTIONS:
            raise BadGroundFacet(f"bad facet direction {f.direction!r}")
        if (f.module, f.direction) in seen:
            raise BadGroundFacet(f"duplicate ground facet {f.module} {f.direction}")
        seen.add((f.module, f.direction))
        n = f.normal
        pos = config.module(f.module).pos
        if config.at(_add(pos, n)) is not None:
            raise BadGroundFacet(f"facet {f.direction} of module {f.module} is covered by module {config.at(_add(pos, n))}")
        axis = next(i for i in range(3) if n[i])
        level = 2 * pos[axis] + n[axis]
        if planes.setdefault(f.direction, level) != level:
            raise BadGroundFacet(
                f"facet {f.direction} of module {f.module} is not co-planar with the other {f.direction} supports"
            )
    return config


def external_load(config: Configuration, p: int, params: Params | None = None) -> Wrench6:
    """Gravity load on module p: (0, 0, -g M, 0, 0, 0)."""
    config.module(p)
    params = params or config.params
    return np.array([0.0, 0.0, -params.gravity * params.mass, 0.0, 0.0, 0.0])
