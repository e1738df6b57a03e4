"""Weighted Jacobi iteration for the perturbed equilibrium system.

Every logical node p owns ``u_p`` and updates it from its neighbors'
previous iterates:

    r_p = sum_q (K11_pq u_p + K12_pq u_q) + sum_supports Kbar11(u_p) u_p - F_p
    u_p <- u_p - beta * r_p / diag(sum_q K11_pq + sum_supports Kbar11(u_p))

which is algebraically the split form ``beta D^-1 (F - R u - sum K12 u_q)
+ (1 - beta) u``. Support tangents ``Kbar11`` are refreshed from the current
iterate at every step.

Three drivers share :func:`local_update` so they agree bit for bit or up to
round-off:

* :func:`solve` runs the real message-passing protocol on a :class:`Runtime`;
* :func:`lockstep` performs the same updates node by node without messages;
* :class:`FastJacobi` vectorizes the beam part for long scaling runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .beam import canonical_stiffness, ground_rotation, oriented_stiffness
from .contact import ContactState, correction_matrix
from .domain import Configuration, external_load
from .runtime import Runtime
from .tree import SpanningTree, build_tree

FacetKey = tuple[int, str]


class SingularDiagonal(ArithmeticError):
    pass


@dataclass(frozen=True)
class SolverSettings:
    beta: float = 2 / 3
    gamma: float = 1e-4
    max_iterations: int = 1000
    tolerance: float = 0.0
    report_every: int = 50

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError(f"max_iterations must be a positive integer, got {self.max_iterations}")
        if not self.tolerance >= 0:
            raise ValueError(f"tolerance must be >= 0, got {self.tolerance}")
        if int(self.report_every) != self.report_every or self.report_every < 0:
            raise ValueError(f"report_every must be a non-negative integer, got {self.report_every}")


@dataclass(frozen=True)
class LocalSystem:
    """Everything node p needs to iterate, built from local information only."""

    id: int
    load: np.ndarray
    a_const: np.ndarray
    d_const: np.ndarray
    neighbors: tuple[int, ...]
    k12: tuple[np.ndarray, ...]
    supports: tuple[tuple[str, np.ndarray], ...]


def local_systems(config: Configuration) -> dict[int, LocalSystem]:
    out = {}
    params = config.params
    k11, _ = canonical_stiffness(params)
    for p in config.ids:
        a = np.zeros((6, 6))
        k12 = []
        for q in config.neighbors[p]:
            a_pq, b_pq = oriented_stiffness(params, config.direction(p, q))
            a = a + a_pq
            k12.append(b_pq)
        supports = []
        for f in config.facets_of(p):
            rh = ground_rotation(f.direction)
            if f.fixed:
                a = a + rh @ k11 @ rh.T
            else:
                supports.append((f.direction, rh))
        out[p] = LocalSystem(p, external_load(config, p), a, np.diag(a).copy(),
                             config.neighbors[p], tuple(k12), tuple(supports))
    return out


def local_update(ls: LocalSystem, u_p: np.ndarray, nbr_u, beta: float, gamma: float, params):
    """One Jacobi step of a single node.

    ``nbr_u`` lists the neighbors' iterates in ``ls.neighbors`` order.
    Returns ``(u_next, residual, contact_states)``.
    """
    r = ls.a_const @ u_p - ls.load
    for k, uq in zip(ls.k12, nbr_u):
        r += k @ uq
    d = ls.d_const
    states = ()
    if ls.supports:
        k11, _ = canonical_stiffness(params)
        d = d.copy()
        states = []
        for _, rh in ls.supports:
            c, st = correction_matrix(k11 @ (rh.T @ u_p), params, gamma)
            tangent = rh @ (c @ k11) @ rh.T
            r += tangent @ u_p
            d += np.diag(tangent)
            states.append(st)
        states = tuple(states)
    if not np.all(d > 0):
        raise SingularDiagonal(f"node {ls.id}: diagonal {d}")
    return u_p - beta * r / d, r, states


def residual_norm(config: Configuration, u: dict[int, np.ndarray], gamma: float = 1e-4) -> float:
    """Euclidean norm of the global equilibrium residual at displacements u."""
    systems = local_systems(config)
    total = 0.0
    for p, ls in systems.items():
        _, r, _ = local_update(ls, u[p], [u[q] for q in ls.neighbors], 1.0, gamma, config.params)
        total += float(r @ r)
    return float(np.sqrt(total))


def load_norm(config: Configuration) -> float:
    return float(np.sqrt(sum(external_load(config, p) @ external_load(config, p) for p in config.ids)))


@dataclass
class JacobiResult:
    u: dict[int, np.ndarray]
    snapshot: dict[int, tuple[np.ndarray, dict[int, np.ndarray]]]
    states: dict[FacetKey, ContactState]
    iterations: int
    last_change: int
    log: list[tuple[int, float, int]] = field(default_factory=list)
    max_sync_gap: int = 0

    def vector(self, ids) -> np.ndarray:
        return np.concatenate([self.u[p] for p in ids])


def _final_states(config, systems, u, gamma) -> dict[FacetKey, ContactState]:
    k11, _ = canonical_stiffness(config.params)
    out = {}
    for p, ls in systems.items():
        for direction, rh in ls.supports:
            _, st = correction_matrix(k11 @ (rh.T @ u[p]), config.params, gamma)
            out[(p, direction)] = st
    return out


class _Node:
    __slots__ = ("ls", "u", "iter", "buf", "stop", "started", "done", "keys",
                 "last_change", "changes", "prev_u", "prev_nbrs")

    def __init__(self, ls, u0, stop):
        self.ls = ls
        self.u = u0
        self.iter = 0
        self.buf = {}
        self.stop = stop
        self.started = False
        self.done = False
        self.keys = None
        self.last_change = 0
        self.changes = 0
        self.prev_u = u0
        self.prev_nbrs = {}


class _Jacobi:
    phase = "jacobi"

    def __init__(self, rt: Runtime, tree: SpanningTree, settings: SolverSettings, u0):
        cfg = rt.config
        self.cfg = cfg
        self.tree = tree
        self.s = settings
        self.params = cfg.params
        systems = local_systems(cfg)
        self.systems = systems
        self.nodes = {}
        for p, ls in systems.items():
            start = np.zeros(6) if u0 is None else rt.quantize(np.array(u0[p], dtype=float))
            self.nodes[p] = _Node(ls, start, settings.max_iterations)
        self.agg: dict[int, dict] = {p: {} for p in cfg.real_ids}
        self.expected = {p: 1 + len(rt.hosted[p]) + len(tree.children[p]) for p in cfg.real_ids}
        self.log: list[tuple[int, float, int]] = []
        self.final_change = None
        self.max_gap = 0
        self.threshold = settings.tolerance * cfg.params.weight * np.sqrt(tree.logical_count)
        self.state_size = 2 + 6 * rt.float_bytes + 2

    def start(self, rt):
        self._init(rt, self.tree.root)

    def _init(self, rt, p):
        for c in self.tree.children[p]:
            rt.send(p, c, "Init", self.s.max_iterations)
        for v in [p] + rt.hosted[p]:
            node = self.nodes[v]
            node.started = True
            if node.iter < node.stop:
                self._broadcast_state(rt, v, node)
            self._advance(rt, v)

    def _broadcast_state(self, rt, v, node):
        payload = (node.iter, node.u, node.stop)
        for q in node.ls.neighbors:
            rt.send(v, q, "JacobiState", payload, self.state_size)

    def handle(self, rt, msg):
        kind = msg.kind
        if kind == "JacobiState":
            v = msg.receiver
            node = self.nodes[v]
            i, uq, stop = msg.payload
            slot = node.buf.get(i)
            if slot is None:
                slot = node.buf[i] = {}
            slot[msg.sender] = uq
            if stop < node.stop:
                if node.iter > stop:
                    raise RuntimeError(f"node {v} learnt stop {stop} at iteration {node.iter}")
                node.stop = stop
            if node.started:
                self._advance(rt, v)
        elif kind == "Init":
            self._init(rt, msg.receiver)
        elif kind == "AggregateUp":
            tag, i, a, b = msg.payload
            self._contribute(rt, msg.receiver, (tag, i), a, b)

    def _advance(self, rt, v):
        node = self.nodes[v]
        ls = node.ls
        deg = len(ls.neighbors)
        nodes = self.nodes
        while not node.done:
            if node.iter >= node.stop:
                node.done = True
                self._contribute(rt, rt.hosts[v], ("final", 0), node.last_change, 0)
                break
            i = node.iter
            slot = node.buf.get(i, {})
            if len(slot) < deg:
                break
            nbr = [slot[q] for q in ls.neighbors]
            u_new, r, states = local_update(ls, node.u, nbr, self.s.beta, self.s.gamma, self.params)
            keys = tuple(st.key for st in states)
            if node.keys is not None and keys != node.keys:
                node.last_change = i
                node.changes += 1
            node.keys = keys
            node.prev_u = node.u
            node.prev_nbrs = slot
            node.buf.pop(i, None)
            node.u = rt.quantize(u_new)
            node.iter = i + 1
            for q in ls.neighbors:
                gap = node.iter - nodes[q].iter
                if gap > self.max_gap:
                    self.max_gap = gap
            if self.s.report_every and i % self.s.report_every == 0:
                self._contribute(rt, rt.hosts[v], ("residual", i), float(r @ r), node.changes)
                node.changes = 0
            if node.iter < node.stop:
                self._broadcast_state(rt, v, node)

    def _contribute(self, rt, host, key, a, b):
        pending = self.agg[host].get(key)
        if pending is None:
            pending = self.agg[host][key] = [0.0, 0, 0]
        tag = key[0]
        if tag == "final":
            pending[0] = max(pending[0], a)
        else:
            pending[0] += a
            pending[1] += b
        pending[2] += 1
        if pending[2] < self.expected[host]:
            return
        del self.agg[host][key]
        parent = self.tree.parent[host]
        if parent is not None:
            rt.send(host, parent, "AggregateUp", (tag, key[1], pending[0], pending[1]))
            return
        if tag == "final":
            self.final_change = int(pending[0])
            return
        norm = float(np.sqrt(pending[0]))
        self.log.append((key[1], norm, pending[1]))
        if self.threshold > 0 and norm <= self.threshold:
            root = self.nodes[host]
            stop = root.iter + self.tree.height + 3
            if stop < root.stop:
                for v in [host] + rt.hosted[host]:
                    self.nodes[v].stop = min(self.nodes[v].stop, max(stop, self.nodes[v].iter))

    def finished(self):
        return self.final_change is not None and all(n.done for n in self.nodes.values())

    def result(self) -> JacobiResult:
        u = {p: n.u for p, n in self.nodes.items()}
        snap = {p: (n.prev_u, dict(n.prev_nbrs)) for p, n in self.nodes.items()}
        iters = {n.iter for n in self.nodes.values()}
        if len(iters) != 1:
            raise RuntimeError(f"nodes stopped at different iterations: {sorted(iters)}")
        return JacobiResult(
            u=u,
            snapshot=snap,
            states=_final_states(self.cfg, self.systems, u, self.s.gamma),
            iterations=iters.pop(),
            last_change=self.final_change,
            log=sorted(self.log),
            max_sync_gap=self.max_gap,
        )


def solve(rt: Runtime, settings: SolverSettings | None = None, tree: SpanningTree | None = None,
          u0: dict[int, np.ndarray] | None = None) -> JacobiResult:
    """Distributed weighted Jacobi on the runtime's configuration.

    ``u0`` warm-starts the iteration (default zero). Builds the spanning
    tree first unless one is supplied.
    """
    settings = settings or SolverSettings()
    if tree is None:
        tree = build_tree(rt)
    prog = _Jacobi(rt, tree, settings, u0)
    out = rt.execute(prog)
    rt.trace.max_sync_gap = max(rt.trace.max_sync_gap, out.max_sync_gap)
    return out


def lockstep(config: Configuration, settings: SolverSettings, iterations: int | None = None,
             u0: dict[int, np.ndarray] | None = None) -> JacobiResult:
    """Same updates as :func:`solve`, applied synchronously without messages."""
    n_iter = settings.max_iterations if iterations is None else iterations
    systems = local_systems(config)
    u = {p: np.zeros(6) if u0 is None else np.array(u0[p], dtype=float) for p in config.ids}
    prev = u
    keys = {}
    last_change = 0
    for i in range(n_iter):
        new = {}
        for p, ls in systems.items():
            new[p], _, states = local_update(ls, u[p], [u[q] for q in ls.neighbors],
                                             settings.beta, settings.gamma, config.params)
            k = tuple(st.key for st in states)
            if p in keys and keys[p] != k:
                last_change = max(last_change, i)
            keys[p] = k
        prev, u = u, new
    snap = {p: (prev[p], {q: prev[q] for q in config.neighbors[p]}) for p in config.ids}
    return JacobiResult(u, snap, _final_states(config, systems, u, settings.gamma), n_iter, last_change)


class FastJacobi:
    """Vectorized lockstep iteration for long runs.

    Beam and bonded-support terms form one dense matrix; unilateral supports
    are handled per support, exactly as in :func:`local_update`. Iterates
    match :func:`lockstep` up to floating-point summation order.
    """

    def __init__(self, config: Configuration, settings: SolverSettings):
        self.config = config
        self.settings = settings
        self.ids = config.ids
        index = {p: i for i, p in enumerate(self.ids)}
        n = len(self.ids)
        systems = local_systems(config)
        K = np.zeros((6 * n, 6 * n))
        F = np.zeros(6 * n)
        d = np.zeros(6 * n)
        self.supports = []
        for p, ls in systems.items():
            i = index[p]
            K[6 * i:6 * i + 6, 6 * i:6 * i + 6] = ls.a_const
            for q, b in zip(ls.neighbors, ls.k12):
                j = index[q]
                K[6 * i:6 * i + 6, 6 * j:6 * j + 6] = b
            F[6 * i:6 * i + 6] = ls.load
            d[6 * i:6 * i + 6] = ls.d_const
            for _, rh in ls.supports:
                self.supports.append((i, rh))
        self.K, self.F, self.d = K, F, d

    def step(self, u: np.ndarray) -> np.ndarray:
        s = self.settings
        r = self.K @ u - self.F
        d = self.d
        if self.supports:
            params = self.config.params
            k11, _ = canonical_stiffness(params)
            d = d.copy()
            for i, rh in self.supports:
                sl = slice(6 * i, 6 * i + 6)
                c, _ = correction_matrix(k11 @ (rh.T @ u[sl]), params, s.gamma)
                tangent = rh @ (c @ k11) @ rh.T
                r[sl] += tangent @ u[sl]
                d[sl] += np.diag(tangent)
        return u - s.beta * r / d

    def run(self, iterations: int, u0: np.ndarray | None = None) -> np.ndarray:
        u = np.zeros(6 * len(self.ids)) if u0 is None else np.array(u0, dtype=float)
        for _ in range(iterations):
            u = self.step(u)
        return u

    def iterations_to(self, reference: np.ndarray, tolerances, max_iterations: int = 10_000_000,
                      check_every: int = 10) -> dict[float, int | None]:
        """First iteration (a multiple of ``check_every``) whose relative error
        against ``reference`` drops below each tolerance; None if never."""
        tols = sorted(tolerances, reverse=True)
        out: dict[float, int | None] = {t: None for t in tols}
        ref_norm = np.linalg.norm(reference)
        u = np.zeros_like(reference)
        k = 0
        pending = list(tols)
        while pending and k < max_iterations:
            for _ in range(check_every):
                u = self.step(u)
            k += check_every
            err = np.linalg.norm(u - reference) / ref_norm
            if not np.isfinite(err):
                break
            while pending and err < pending[0]:
                out[pending.pop(0)] = k
        return out
