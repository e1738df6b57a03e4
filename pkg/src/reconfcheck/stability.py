"""Loss-of-balance predictors.

Simplified check (flat ground, rigid body): each ground-level corner j with
planar offset v_j = (X_j - X, Y_j - Y) from the center of mass protects the
closed half-circle of tipping directions within 90 deg of v_j. The structure
is stable iff the union of these safe ranges covers the full circle.

Model-based check: every support reports its active corner points from the
final contact states; the merged set must contain three noncollinear points
(or any support in full stable contact).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .contact import STABLE
from .domain import Configuration
from .oracle import NotFlatGround
from .runtime import Runtime
from .tree import SpanningTree, broadcast, converge_cast

TWO_PI = 2 * math.pi
ANGLE_TOL = 1e-9


class SolverNotRun(RuntimeError):
    pass


@dataclass(frozen=True)
class SafeAngleRange:
    """A union of closed arcs of directions, kept in canonical form.

    ``arcs`` are sorted disjoint ``(lo, hi)`` pairs within [0, 2 pi]; an arc
    crossing angle 0 is stored as two pieces. Unions of straight-angle
    ranges always collapse to a single arc or the full circle.
    """

    arcs: tuple[tuple[float, float], ...] = ()

    @classmethod
    def empty(cls) -> "SafeAngleRange":
        return cls(())

    @classmethod
    def full(cls) -> "SafeAngleRange":
        return cls(((0.0, TWO_PI),))

    @classmethod
    def arc(cls, start: float, extent: float) -> "SafeAngleRange":
        if extent <= 0:
            return cls.empty()
        if extent >= TWO_PI:
            return cls.full()
        a = start % TWO_PI
        if a >= TWO_PI:
            a = 0.0
        b = a + extent
        if b <= TWO_PI:
            return cls(_normalize([(a, b)]))
        return cls(_normalize([(0.0, b - TWO_PI), (a, TWO_PI)]))

    @property
    def is_empty(self) -> bool:
        return not self.arcs

    @property
    def is_full(self) -> bool:
        return self.arcs == ((0.0, TWO_PI),)

    def union(self, other: "SafeAngleRange") -> "SafeAngleRange":
        return SafeAngleRange(_normalize(list(self.arcs) + list(other.arcs)))

    __or__ = union

    def as_start_extent(self) -> tuple[float, float] | None:
        """(start, extent) of the range when it is a single arc; None if empty."""
        if not self.arcs:
            return None
        if self.is_full:
            return (0.0, TWO_PI)
        if len(self.arcs) == 1:
            lo, hi = self.arcs[0]
            return (lo, hi - lo)
        if len(self.arcs) == 2 and self.arcs[0][0] == 0.0 and self.arcs[1][1] == TWO_PI:
            lo = self.arcs[1][0]
            return (lo, TWO_PI - lo + self.arcs[0][1])
        raise ValueError(f"range is not a single arc: {self.arcs}")

    def contains(self, angle: float) -> bool:
        a = angle % TWO_PI
        if a >= TWO_PI:
            a = 0.0
        return any(lo <= a <= hi or lo <= a + TWO_PI <= hi for lo, hi in self.arcs)


def _normalize(arcs) -> tuple[tuple[float, float], ...]:
    arcs = sorted((float(lo), float(hi)) for lo, hi in arcs if hi > lo)
    out: list[list[float]] = []
    for lo, hi in arcs:
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return tuple((lo, hi) for lo, hi in out)


@dataclass(frozen=True)
class CenterOfMass:
    X: float
    Y: float
    Z: float
    total_mass: float


def _mass_record(config: Configuration, p: int) -> np.ndarray:
    m = config.params.mass
    return np.concatenate([[m], m * config.center(p)])


def center_of_mass(config: Configuration, rt: Runtime | None = None, tree: SpanningTree | None = None) -> CenterOfMass:
    """Mass-weighted mean of module centers, virtual modules included.

    With a runtime and tree this is a converge-cast of (m, m X, m Y, m Z);
    otherwise the same fold is done directly.
    """
    if rt is None:
        acc = sum((_mass_record(config, p) for p in config.ids), np.zeros(4))
    else:
        values = {p: sum((_mass_record(config, v) for v in [p] + rt.hosted[p]), np.zeros(4))
                  for p in config.real_ids}
        acc = converge_cast(rt, tree, values, lambda a, b: a + b, phase="com", tag="mass")
    m = acc[0]
    return CenterOfMass(acc[1] / m, acc[2] / m, acc[3] / m, m)


def _check_flat(config: Configuration):
    for f in config.ground_facets:
        if f.direction != "-z" or config.module(f.module).pos[2] != 0:
            raise NotFlatGround(f"support {f.module} {f.direction} is not a bottom face on z = 0")


def ground_corners(config: Configuration, p: int) -> list[tuple[float, float]]:
    """Planar corners of p's bottom face if that face rests on the ground."""
    if not any(f.direction == "-z" for f in config.facets_of(p)):
        return []
    c = config.center(p)
    h = config.params.edge_length / 2
    return [(c[0] + sx * h, c[1] + sy * h) for sx in (-1, 1) for sy in (-1, 1)]


def corner_range(corner, com: CenterOfMass, widen: float = 0.0) -> SafeAngleRange:
    """Directions within 90 deg (plus ``widen``) of the corner's offset from the CoM."""
    vx, vy = corner[0] - com.X, corner[1] - com.Y
    if vx == 0 and vy == 0:
        return SafeAngleRange.empty()
    theta = math.atan2(vy, vx)
    return SafeAngleRange.arc(theta - math.pi / 2 - widen, math.pi + 2 * widen)


def safe_angle_range(p: int, com: CenterOfMass, config: Configuration, widen: float = 0.0) -> SafeAngleRange:
    out = SafeAngleRange.empty()
    for corner in ground_corners(config, p):
        out = out | corner_range(corner, com, widen)
    return out


@dataclass(frozen=True)
class StabilityVerdict:
    method: str
    verdict: str
    marginal: bool
    detail: object = None

    @property
    def stable(self) -> bool:
        return self.verdict == "stable"

    def to_dict(self) -> dict:
        return {"method": self.method, "verdict": self.verdict, "marginal_flag": self.marginal,
                "detail": self.detail}


def _ranges_of(config, p, com):
    # strict, nominal and lenient variants; the marginal band sits between the outer two
    return (
        safe_angle_range(p, com, config, -ANGLE_TOL),
        safe_angle_range(p, com, config, 0.0),
        safe_angle_range(p, com, config, ANGLE_TOL),
    )


def _merge3(a, b):
    return tuple(x | y for x, y in zip(a, b))


def simplified_stability(config: Configuration, rt: Runtime | None = None, tree: SpanningTree | None = None) -> StabilityVerdict:
    """Convex-hull stability via aggregated safe angle ranges."""
    _check_flat(config)
    if any(f.fixed for f in config.ground_facets):
        return StabilityVerdict("simplified", "stable", False, {"aggregate_range": [0.0, TWO_PI], "bonded": True})
    com = center_of_mass(config, rt, tree)
    if rt is None:
        agg = None
        for p in config.ids:
            r = _ranges_of(config, p, com)
            agg = r if agg is None else _merge3(agg, r)
    else:
        xy = broadcast(rt, tree, (com.X, com.Y), phase="com-broadcast")
        values = {}
        for p in config.real_ids:
            X, Y = xy[p]
            local = CenterOfMass(X, Y, com.Z, com.total_mass)
            acc = _ranges_of(config, p, local)
            for v in rt.hosted[p]:
                acc = _merge3(acc, _ranges_of(config, v, local))
            values[p] = acc
        agg = converge_cast(rt, tree, values, _merge3, phase="simplified", tag="angles")
    strict, nominal, lenient = agg
    if strict.is_full:
        verdict, marginal = "stable", False
    elif lenient.is_full:
        verdict, marginal = "stable", True
    else:
        verdict, marginal = "unstable", False
    try:
        rng = nominal.as_start_extent()
    except ValueError:
        rng = [list(a) for a in nominal.arcs]
    detail = {"aggregate_range": None if rng is None else list(rng), "com": [com.X, com.Y, com.Z]}
    return StabilityVerdict("simplified", verdict, marginal, detail)


# ------------------------------------------------------------ model-based


@dataclass(frozen=True)
class SupportSet:
    """Either the 'stable' marker or at most two distinct collinear points."""

    stable: bool = False
    points: tuple[tuple[float, float, float], ...] = ()

    def merge(self, other: "SupportSet", tol: float = 1e-9) -> "SupportSet":
        if self.stable or other.stable:
            return SupportSet(True)
        return reduce_points(self.points + other.points, tol)

    __or__ = merge


def reduce_points(points, tol: float = 1e-9) -> SupportSet:
    """Apply the merge rule: noncollinear -> stable, collinear -> extreme two."""
    pts = sorted({tuple(float(c) for c in p) for p in points})
    uniq: list[np.ndarray] = []
    for p in pts:
        a = np.array(p)
        if all(np.linalg.norm(a - b) > tol for b in uniq):
            uniq.append(a)
    if len(uniq) <= 1:
        return SupportSet(False, tuple(tuple(p) for p in uniq))
    # farthest pair spans the line if all points are collinear
    best = max(((i, j) for i in range(len(uniq)) for j in range(i + 1, len(uniq))),
               key=lambda ij: (np.linalg.norm(uniq[ij[0]] - uniq[ij[1]]), -ij[0], -ij[1]))
    a, b = uniq[best[0]], uniq[best[1]]
    d = b - a
    length = np.linalg.norm(d)
    for c in uniq:
        if np.linalg.norm(np.cross(d, c - a)) > tol * length:
            return SupportSet(True)
    pair = sorted([tuple(a), tuple(b)])
    return SupportSet(False, tuple(pair))


def _near_boundary(st, h: float, tol: float) -> tuple[bool, bool]:
    scale = tol * abs(st.f_z) * h
    return abs(st.phi_x) <= scale, abs(st.phi_y) <= scale


def support_set(config: Configuration, p: int, states, marginal_tol: float = 0.0) -> tuple[SupportSet, bool]:
    """Active corners of all of p's supports in global coordinates.

    A tilt whose margin |Phi| is within ``marginal_tol`` of the restoring
    torque |f_z| L/2 takes the stable branch; the second return value flags
    that this happened.
    """
    from .beam import ground_rotation

    acc = SupportSet()
    L = config.params.edge_length
    tol = 1e-9 * L
    marginal = False
    for f in config.facets_of(p):
        if f.fixed:
            return SupportSet(True), marginal
        st = states.get((p, f.direction))
        if st is None:
            raise SolverNotRun(f"no contact state for support {p} {f.direction}")
        if st.in_contact and marginal_tol > 0:
            near_x, near_y = _near_boundary(st, L / 2, marginal_tol)
            if near_x or near_y:
                marginal = True
                st = dataclasses.replace(st, tilt_x=STABLE if near_x else st.tilt_x,
                                         tilt_y=STABLE if near_y else st.tilt_y)
        corners = st.active_corners(L)
        if corners == STABLE:
            return SupportSet(True), marginal
        r = ground_rotation(f.direction)[:3, :3]
        c = config.center(p)
        pts = [tuple(c + r @ np.array([x, y, -L / 2])) for x, y in corners]
        acc = acc.merge(SupportSet(False, tuple(pts)), tol)
    return acc, marginal


def model_based_stability(config: Configuration, states, rt: Runtime | None = None,
                          tree: SpanningTree | None = None, marginal_tol: float = 1e-4) -> StabilityVerdict:
    """Stable iff the merged active support set is 'stable'.

    ``states`` maps (module, facet direction) to the final ContactState.
    Tilts within ``marginal_tol`` of the branch boundary count as stable
    contact and raise the marginal flag.
    """
    if states is None:
        raise SolverNotRun("model-based stability needs contact states from a solve")
    tol = 1e-9 * config.params.edge_length

    def local(p):
        return support_set(config, p, states, marginal_tol)

    def combine(a, b):
        return (a[0].merge(b[0], tol), a[1] or b[1])

    if rt is None:
        agg = (SupportSet(), False)
        for p in config.ids:
            agg = combine(agg, local(p))
    else:
        values = {}
        for p in config.real_ids:
            acc = local(p)
            for v in rt.hosted[p]:
                acc = combine(acc, local(v))
            values[p] = acc
        agg = converge_cast(rt, tree, values, combine, phase="model-based", tag="support")
    s, marginal = agg
    verdict = "stable" if s.stable else "unstable"
    detail = {"support_set": "stable" if s.stable else [list(p) for p in s.points]}
    return StabilityVerdict("model-based", verdict, marginal, detail)
