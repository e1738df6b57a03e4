"""Distributed BFS-like spanning tree over real modules, plus aggregation.

Tree construction floods ``Tree(depth)`` from the centroid. A module adopts
the sender of the first Tree it receives as parent, answers ``TreeAck`` and
forwards ``Tree(depth + 1)`` to its other real neighbors. Every non-parent
neighbor therefore answers exactly once, with TreeAck if it became a child
and with Tree otherwise, so each module knows its children without extra
messages. A final converge-cast reports the tree height and the number of
logical nodes to the root.

Message counts on a real graph with n modules and E connections:
Tree = 2E - (n - 1), TreeAck = n - 1, AggregateUp = n - 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from .runtime import Runtime


@dataclass(frozen=True)
class SpanningTree:
    root: int
    parent: dict[int, int | None]
    children: dict[int, tuple[int, ...]]
    depth: dict[int, int]
    height: int
    logical_count: int

    def edges(self) -> list[tuple[int, int]]:
        return sorted((p, c) for p, cs in self.children.items() for c in cs)


class _BuildTree:
    phase = "tree"

    def __init__(self, rt: Runtime):
        cfg = rt.config
        self.rt = rt
        self.root = cfg.centroid
        self.nbrs = {p: cfg.real_neighbors(p) for p in cfg.real_ids}
        self.parent: dict[int, int | None] = {}
        self.depth: dict[int, int] = {}
        self.children: dict[int, list[int]] = {p: [] for p in cfg.real_ids}
        self.heard: dict[int, set[int]] = {p: set() for p in cfg.real_ids}
        self.reports: dict[int, list[tuple[int, int]]] = {p: [] for p in cfg.real_ids}
        self.sent_up: set[int] = set()
        self.summary: tuple[int, int] | None = None

    def start(self, rt):
        r = self.root
        self.parent[r] = None
        self.depth[r] = 0
        for q in self.nbrs[r]:
            rt.send(r, q, "Tree", 0)
        self._maybe_report(rt, r)

    def handle(self, rt, msg):
        p, s = msg.receiver, msg.sender
        if msg.kind == "Tree":
            if p not in self.parent:
                self.parent[p] = s
                self.depth[p] = msg.payload + 1
                rt.send(p, s, "TreeAck")
                for q in self.nbrs[p]:
                    if q != s:
                        rt.send(p, q, "Tree", self.depth[p])
            else:
                self.heard[p].add(s)
        elif msg.kind == "TreeAck":
            self.heard[p].add(s)
            self.children[p].append(s)
        elif msg.kind == "AggregateUp":
            self.reports[p].append(msg.payload)
        self._maybe_report(rt, p)

    def _maybe_report(self, rt, p):
        if p in self.sent_up or p not in self.parent:
            return
        expected = set(self.nbrs[p]) - {self.parent[p]}
        if not expected <= self.heard[p] or len(self.reports[p]) < len(self.children[p]):
            return
        count = 1 + len(rt.hosted[p])
        height = self.depth[p]
        for c, h in self.reports[p]:
            count += c
            height = max(height, h)
        self.sent_up.add(p)
        if self.parent[p] is None:
            self.summary = (count, height)
        else:
            rt.send(p, self.parent[p], "AggregateUp", (count, height))

    def finished(self):
        return self.summary is not None

    def result(self) -> SpanningTree:
        return SpanningTree(
            root=self.root,
            parent=dict(self.parent),
            children={p: tuple(sorted(c)) for p, c in self.children.items()},
            depth=dict(self.depth),
            height=self.summary[1],
            logical_count=self.summary[0],
        )


def build_tree(rt: Runtime) -> SpanningTree:
    return rt.execute(_BuildTree(rt))


class _ConvergeCast:
    def __init__(self, tree: SpanningTree, values: dict[int, Any], combine, phase, tag):
        self.tree = tree
        self.values = values
        self.combine = combine
        self.phase = phase
        self.tag = tag
        self.acc = {}
        self.waiting = {}
        self.out = None
        self.done = False

    def start(self, rt):
        for p, cs in self.tree.children.items():
            self.acc[p] = self.values[p]
            self.waiting[p] = len(cs)
        for p in sorted(self.tree.children):
            if self.waiting[p] == 0:
                self._emit(rt, p)

    def handle(self, rt, msg):
        p = msg.receiver
        self.acc[p] = self.combine(self.acc[p], msg.payload[1])
        self.waiting[p] -= 1
        if self.waiting[p] == 0:
            self._emit(rt, p)

    def _emit(self, rt, p):
        parent = self.tree.parent[p]
        if parent is None:
            self.out = self.acc[p]
            self.done = True
        else:
            rt.send(p, parent, "AggregateUp", (self.tag, self.acc[p]))

    def finished(self):
        return self.done

    def result(self):
        return self.out


def converge_cast(rt: Runtime, tree: SpanningTree, values: dict[int, Any],
                  combine: Callable[[Any, Any], Any], phase: str = "aggregate", tag: str = "value") -> Any:
    """Fold per-module values towards the root; n - 1 AggregateUp messages.

    ``combine`` must be associative and commutative; the fold order depends
    on message delivery order.
    """
    return rt.execute(_ConvergeCast(tree, values, combine, phase, tag))


class _Broadcast:
    def __init__(self, tree, value, kind, phase, on_receive):
        self.tree = tree
        self.value = value
        self.kind = kind
        self.phase = phase
        self.on_receive = on_receive
        self.received = {}

    def start(self, rt):
        self._deliver(rt, self.tree.root, self.value)

    def handle(self, rt, msg):
        self._deliver(rt, msg.receiver, msg.payload)

    def _deliver(self, rt, p, value):
        self.received[p] = value
        if self.on_receive is not None:
            self.on_receive(p, value)
        for c in self.tree.children[p]:
            rt.send(p, c, self.kind, value)

    def finished(self):
        return len(self.received) == len(self.tree.children)

    def result(self):
        return self.received


def broadcast(rt: Runtime, tree: SpanningTree, value: Any, kind: str = "BroadcastDown",
              phase: str = "broadcast", on_receive=None) -> dict[int, Any]:
    """Send ``value`` from the root down the tree; n - 1 messages."""
    return rt.execute(_Broadcast(tree, value, kind, phase, on_receive))


def fold_hosted(rt: Runtime, values: dict[int, Any], combine) -> dict[int, Any]:
    """Fold each virtual module's value into its host's (no messages)."""
    out = {}
    for p in rt.config.real_ids:
        acc = values[p]
        for v in rt.hosted[p]:
            acc = combine(acc, values[v])
        out[p] = acc
    return out
