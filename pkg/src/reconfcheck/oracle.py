"""Centralized reference solutions used to check the distributed algorithms.

Everything here sees the whole structure at once: dense assembly and direct
solve of the perturbed system, spectral radius of the Jacobi iteration
matrix, rigid-body statics on determinate trees and a point-in-convex-hull
stability test.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .beam import ground_rotation, oriented_stiffness
from .contact import ContactState, correction_matrix
from .beam import canonical_stiffness
from .domain import Configuration, GroundFacet, external_load

MAX_SPECTRAL_DOFS = 1200


class NoFixedPoint(RuntimeError):
    def __init__(self, message, cycle=None):
        super().__init__(message)
        self.cycle = cycle or []


class DimensionTooLarge(ValueError):
    pass


class StaticallyIndeterminate(ValueError):
    pass


class NotFlatGround(ValueError):
    pass


FacetKey = tuple[int, str]


def facet_key(f: GroundFacet) -> FacetKey:
    return (f.module, f.direction)


@dataclass
class GlobalSystem:
    ids: list[int]
    stiffness: np.ndarray
    load: np.ndarray
    solution: np.ndarray | None = None
    states: dict[FacetKey, ContactState] = field(default_factory=dict)
    history: list[dict[FacetKey, tuple]] = field(default_factory=list)

    @property
    def index(self) -> dict[int, int]:
        return {p: i for i, p in enumerate(self.ids)}

    def displacement(self, p: int) -> np.ndarray:
        i = self.index[p]
        return self.solution[6 * i:6 * i + 6]

    def displacements(self) -> dict[int, np.ndarray]:
        return {p: self.solution[6 * i:6 * i + 6].copy() for i, p in enumerate(self.ids)}


def classify(config: Configuration, u: dict[int, np.ndarray], gamma: float) -> dict[FacetKey, ContactState]:
    """Contact state of every unilateral support for the given displacements."""
    k11, _ = canonical_stiffness(config.params)
    out = {}
    for f in config.ground_facets:
        if f.fixed:
            continue
        rh = ground_rotation(f.direction)
        _, state = correction_matrix(k11 @ (rh.T @ u[f.module]), config.params, gamma)
        out[facet_key(f)] = state
    return out


def support_tangent(config: Configuration, f: GroundFacet, state: ContactState | None, gamma: float) -> np.ndarray:
    """Global tangent of a support beam for a frozen classification."""
    rh = ground_rotation(f.direction)
    k11, _ = canonical_stiffness(config.params)
    if f.fixed or state is None:
        return rh @ k11 @ rh.T
    c = _matrix_for(state, config.params.edge_length / 2, gamma)
    return rh @ (c @ k11) @ rh.T


def _matrix_for(state: ContactState, h: float, gamma: float) -> np.ndarray:
    # rebuild the branch matrix from a classification key
    if state.normal == "separation":
        return gamma * np.eye(6)
    c = np.eye(6)
    gbar = 1 - gamma
    if state.tilt_x != "stable":
        s = 1.0 if state.tilt_x == "tilting+" else -1.0
        c[3] = 0.0
        c[3, 3], c[3, 1], c[3, 2] = gamma, gbar * h, -gbar * h * s
    if state.tilt_y != "stable":
        s = 1.0 if state.tilt_y == "tilting+" else -1.0
        c[4] = 0.0
        c[4, 4], c[4, 0], c[4, 2] = gamma, -gbar * h, -gbar * h * s
    return c


def assemble(config: Configuration, states: dict[FacetKey, ContactState] | None = None, gamma: float = 1e-4) -> GlobalSystem:
    """Assemble the perturbed global system for a frozen contact classification.

    Missing entries in ``states`` default to stable contact.
    """
    states = states or {}
    ids = config.ids
    index = {p: i for i, p in enumerate(ids)}
    n = len(ids)
    K = np.zeros((6 * n, 6 * n))
    F = np.zeros(6 * n)
    for p in ids:
        i = index[p]
        F[6 * i:6 * i + 6] = external_load(config, p)
    for p, q in config.connections:
        i, j = index[p], index[q]
        a_pq, b_pq = oriented_stiffness(config.params, config.direction(p, q))
        a_qp, b_qp = oriented_stiffness(config.params, config.direction(q, p))
        K[6 * i:6 * i + 6, 6 * i:6 * i + 6] += a_pq
        K[6 * i:6 * i + 6, 6 * j:6 * j + 6] += b_pq
        K[6 * j:6 * j + 6, 6 * j:6 * j + 6] += a_qp
        K[6 * j:6 * j + 6, 6 * i:6 * i + 6] += b_qp
    for f in config.ground_facets:
        i = index[f.module]
        K[6 * i:6 * i + 6, 6 * i:6 * i + 6] += support_tangent(config, f, states.get(facet_key(f)), gamma)
    return GlobalSystem(ids, K, F, states=dict(states))


def assemble_and_solve(config: Configuration, params=None, gamma: float = 1e-4, max_sweeps: int = 50) -> GlobalSystem:
    """Direct solve with a fixed-point loop over contact classifications."""
    if params is not None:
        config = config.with_params(params)
    states: dict[FacetKey, ContactState] = {}
    seen: list[dict] = []
    for _ in range(max_sweeps):
        system = assemble(config, states, gamma)
        system.solution = np.linalg.solve(system.stiffness, system.load)
        new = classify(config, system.displacements(), gamma)
        keys = {k: s.key for k, s in new.items()}
        system.history = seen + [keys]
        if keys == {k: s.key for k, s in _complete(config, states, gamma).items()}:
            system.states = new
            return system
        if keys in seen:
            cycle = seen[seen.index(keys):]
            return _break_cycle(config, cycle, gamma, seen + [keys])
        seen.append(keys)
        states = new
    raise NoFixedPoint(f"no stable classification after {max_sweeps} sweeps", seen)


def _complete(config, states, gamma):
    out = {}
    for f in config.ground_facets:
        if f.fixed:
            continue
        out[facet_key(f)] = states.get(facet_key(f), ContactState())
    return out


def _break_cycle(config, cycle, gamma, history):
    # prefer the stable/contact branch for any support that flips within the cycle
    merged = {}
    for k in cycle[0]:
        variants = {c[k] for c in cycle}
        merged[k] = ContactState() if len(variants) > 1 else ContactState(*next(iter(variants)))
    system = assemble(config, merged, gamma)
    system.solution = np.linalg.solve(system.stiffness, system.load)
    new = classify(config, system.displacements(), gamma)
    system.history = history
    if {k: s.key for k, s in new.items()} == {k: s.key for k, s in merged.items()}:
        system.states = new
        return system
    raise NoFixedPoint("contact classification cycles", cycle)


def residuals(config: Configuration, system: GlobalSystem, u: np.ndarray | None = None, gamma: float = 1e-4) -> dict[int, np.ndarray]:
    """Per-module equilibrium residuals with contact forces re-evaluated at u."""
    u = system.solution if u is None else u
    uu = {p: u[6 * i:6 * i + 6] for i, p in enumerate(system.ids)}
    states = classify(config, uu, gamma)
    relin = assemble(config, states, gamma)
    r = relin.stiffness @ u - relin.load
    return {p: r[6 * i:6 * i + 6] for i, p in enumerate(system.ids)}


def iteration_matrix(config: Configuration, beta: float, states=None, gamma: float = 1e-4) -> np.ndarray:
    system = assemble(config, states, gamma)
    d = np.diag(system.stiffness)
    return np.eye(len(d)) - beta * system.stiffness / d[:, None]


def spectral_radius(config: Configuration, beta: float = 2 / 3, states=None, gamma: float = 1e-4) -> float:
    """rho(I - beta D^-1 K) for a frozen contact classification."""
    ndof = 6 * len(config.ids)
    if ndof > MAX_SPECTRAL_DOFS:
        raise DimensionTooLarge(f"{ndof} DOFs exceeds {MAX_SPECTRAL_DOFS}")
    c = iteration_matrix(config, beta, states, gamma)
    return float(np.max(np.abs(np.linalg.eigvals(c))))


# ---------------------------------------------------------------- statics


def statics_oracle(config: Configuration) -> dict[tuple[int, int], np.ndarray]:
    """Rigid-body mid-connection wrenches of a statically determinate tree.

    The structure must be a tree with a single support facet. For each
    connection (p, q), p < q, the wrench is expressed in the connection's
    local frame with the same sign convention as the elastic estimate.
    """
    from .beam import rotation_for

    if len(config.ground_facets) != 1:
        raise StaticallyIndeterminate(f"{len(config.ground_facets)} support facets")
    n = len(config.ids)
    if len(config.connections) != n - 1:
        raise StaticallyIndeterminate("connection graph has cycles")
    anchor = config.ground_facets[0].module
    W = config.params.weight
    out = {}
    for p, q in config.connections:
        side_p = _side(config, p, q)
        sign = 1.0
        side = side_p
        if anchor in side_p:
            side = set(config.ids) - side_p
            sign = -1.0
        mid = 0.5 * (config.center(p) + config.center(q))
        force = np.array([0.0, 0.0, -W])
        f = np.zeros(3)
        m = np.zeros(3)
        for k in side:
            f += force
            m += np.cross(config.center(k) - mid, force)
        wrench = sign * np.concatenate([f, m])
        out[(p, q)] = rotation_for(config, p, q).T @ wrench
    return out


def _side(config, p, q) -> set[int]:
    comp = {p}
    stack = [p]
    while stack:
        a = stack.pop()
        for b in config.neighbors[a]:
            if (a, b) in ((p, q), (q, p)) or b in comp:
                continue
            comp.add(b)
            stack.append(b)
    return comp


# ------------------------------------------------------------ convex hull


def ground_corners(config: Configuration) -> list[tuple[float, float]]:
    """Corners of all bottom support faces; raises unless they lie on z = 0."""
    h = config.params.edge_length / 2
    pts = []
    for f in config.ground_facets:
        if f.direction != "-z" or config.module(f.module).pos[2] != 0:
            raise NotFlatGround(f"support {f.module} {f.direction} is not a bottom face on z = 0")
        c = config.center(f.module)
        for sx in (-1, 1):
            for sy in (-1, 1):
                pts.append((c[0] + sx * h, c[1] + sy * h))
    return pts


def mass_center(config: Configuration) -> np.ndarray:
    return np.mean([config.center(p) for p in config.ids], axis=0)


def _hull(points):
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def convex_hull_oracle(config: Configuration, tol: float = 1e-9) -> str:
    """'stable', 'marginal' or 'unstable' from a point-in-hull test of the CoM."""
    if any(f.fixed for f in config.ground_facets):
        ground_corners(config)
        return "stable"
    pts = ground_corners(config)
    if not pts:
        return "unstable"
    X, Y, _ = mass_center(config)
    hull = _hull(pts)
    scale = tol * config.params.edge_length
    if len(hull) < 3:
        return "unstable"
    dmin = np.inf
    for a, b in zip(hull, hull[1:] + hull[:1]):
        ex, ey = b[0] - a[0], b[1] - a[1]
        # signed distance, positive inside for a counter-clockwise hull
        d = (ex * (Y - a[1]) - ey * (X - a[0])) / np.hypot(ex, ey)
        dmin = min(dmin, d)
    if dmin > scale:
        return "stable"
    if dmin >= -scale:
        return "marginal"
    return "unstable"
