"""Message-passing runtime: modules as logical processes on the lattice graph.

Every real module is a process. A virtual module is a logical node whose
handlers run inside its host process (the lowest-id real neighbor). Messages
travel only along edges of the connection graph; a send to anything else
raises :class:`LocalityViolation`.

Two delivery policies are available:

``random``
    repeatedly pick a non-empty channel uniformly with a seeded RNG and
    deliver its oldest message (FIFO per ordered pair).
``sync``
    lockstep rounds; all messages sent in round r are delivered, in
    (receiver, sender) order, before any message of round r + 1.

A message's round is one more than the round of the message whose handler
sent it, so under ``sync`` it is the global round number and under
``random`` the causal depth.
"""

from __future__ import annotations

import dataclasses
import json
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .domain import Configuration, OrphanVirtualModule

KINDS = ("Init", "Tree", "TreeAck", "JacobiState", "AggregateUp", "BroadcastDown", "Verdict")

MAX_FRAGMENT_BYTES = 17
HEADER_BYTES = 1


class Deadlock(RuntimeError):
    pass


class LocalityViolation(RuntimeError):
    pass


def assign_virtuals(config: Configuration) -> dict[int, int]:
    """Map every virtual module to the real neighbor that emulates it."""
    out = {}
    for v in config.virtual_ids:
        real = config.real_neighbors(v)
        if not real:
            raise OrphanVirtualModule(f"virtual module {v} has no real neighbor")
        out[v] = min(real)
    return out


def payload_size(payload: Any, float_bytes: int = 8) -> int:
    """Serialized size: floats take ``float_bytes``, ints/ids 2, bools/tags 1."""
    if payload is None:
        return 0
    if isinstance(payload, (bool, np.bool_)):
        return 1
    if isinstance(payload, (int, np.integer)):
        return 2
    if isinstance(payload, (float, np.floating)):
        return float_bytes
    if isinstance(payload, str):
        return 1
    if isinstance(payload, np.ndarray):
        return payload.size * float_bytes
    if dataclasses.is_dataclass(payload):
        return sum(payload_size(getattr(payload, f.name), float_bytes) for f in dataclasses.fields(payload))
    if isinstance(payload, dict):
        return sum(payload_size(v, float_bytes) for v in payload.values())
    return sum(payload_size(v, float_bytes) for v in payload)


def fragments_for(size: int) -> int:
    """Number of <= 17-byte frames carrying ``size`` payload bytes.

    Each frame repeats the kind header and a fragment index byte.
    """
    if size + HEADER_BYTES <= MAX_FRAGMENT_BYTES:
        return 1
    per_frame = MAX_FRAGMENT_BYTES - HEADER_BYTES - 1
    return -(-size // per_frame)


class Message:
    __slots__ = ("kind", "sender", "receiver", "payload", "size_bytes", "round")

    def __init__(self, kind, sender, receiver, payload, size_bytes, round_):
        self.kind = kind
        self.sender = sender
        self.receiver = receiver
        self.payload = payload
        self.size_bytes = size_bytes
        self.round = round_

    def __repr__(self):
        return f"Message({self.kind}, {self.sender}->{self.receiver}, r{self.round})"


@dataclass
class ExecutionTrace:
    """Every delivered message plus per-node handler counts.

    Records are tuples ``(phase, round, sender, receiver, kind, size_bytes,
    fragments, internal)``; ``internal`` marks traffic between a host and
    the virtual modules it emulates, which never leaves the host.
    """

    records: list[tuple] = field(default_factory=list)
    cpu_steps: Counter = field(default_factory=Counter)
    max_sync_gap: int = 0

    FIELDS = ("phase", "round", "sender", "receiver", "kind", "bytes", "fragments", "internal")

    def count(self, kind: str | None = None, phase: str | None = None, internal: bool | None = None) -> int:
        n = 0
        for rec in self.records:
            if kind is not None and rec[4] != kind:
                continue
            if phase is not None and rec[0] != phase:
                continue
            if internal is not None and rec[7] != internal:
                continue
            n += 1
        return n

    def totals_by_kind(self) -> dict[str, int]:
        c = Counter(rec[4] for rec in self.records)
        return {k: c[k] for k in KINDS if c[k]}

    def totals_by_phase(self) -> dict[str, int]:
        return dict(Counter(rec[0] for rec in self.records))

    def bytes_total(self) -> int:
        return sum(rec[5] for rec in self.records)

    def frames_total(self) -> int:
        return sum(rec[6] for rec in self.records if not rec[7])

    def rounds(self, phase: str | None = None) -> int:
        rs = [rec[1] for rec in self.records if phase is None or rec[0] == phase]
        return max(rs) if rs else 0

    def non_local(self, config: Configuration) -> list[tuple]:
        return [rec for rec in self.records if rec[3] not in config.neighbors[rec[2]]]

    def to_lines(self) -> str:
        return "".join(json.dumps(dict(zip(self.FIELDS, rec))) + "\n" for rec in self.records)

    def fingerprint(self) -> int:
        return hash(tuple(self.records))


class Runtime:
    """Deterministic scheduler shared by all protocol drivers of one run."""

    def __init__(self, config: Configuration, seed: int = 0, policy: str = "random", fidelity: bool = False):
        if policy == "round-robin":
            policy = "sync"
        if policy not in ("random", "sync"):
            raise ValueError(f"unknown schedule policy {policy!r}")
        self.config = config
        self.policy = policy
        self.seed = seed
        self.fidelity = fidelity
        self.float_bytes = 4 if fidelity else 8
        self.rng = random.Random(seed)
        self.hosts = {p: p for p in config.real_ids}
        self.hosts.update(assign_virtuals(config))
        self.hosted = {p: [] for p in config.real_ids}
        for v, h in self.hosts.items():
            if v != h:
                self.hosted[h].append(v)
        self.trace = ExecutionTrace()
        self._neighbors = {p: frozenset(n) for p, n in config.neighbors.items()}
        self._round = 0
        self._phase = ""
        self._reset_queues()

    def _reset_queues(self):
        self._channels: dict[tuple[int, int], deque] = {}
        self._ready: list[tuple[int, int]] = []
        self._ready_pos: dict[tuple[int, int], int] = {}
        self._buckets: dict[int, list] = {}
        self._seq = 0
        self._pending = 0

    def quantize(self, x):
        """Round floats to the wire precision (4-byte floats in fidelity mode)."""
        if not self.fidelity:
            return x
        if isinstance(x, np.ndarray):
            return x.astype(np.float32).astype(np.float64)
        return float(np.float32(x))

    def send(self, sender: int, receiver: int, kind: str, payload: Any = None, size: int | None = None):
        if receiver not in self._neighbors[sender]:
            raise LocalityViolation(f"{kind} from {sender} to non-neighbor {receiver}")
        if size is None:
            size = payload_size(payload, self.float_bytes)
        msg = Message(kind, sender, receiver, payload, size, self._round + 1)
        self._pending += 1
        if self.policy == "sync":
            self._buckets.setdefault(msg.round, []).append(((receiver, sender, self._seq), msg))
            self._seq += 1
            return
        key = (sender, receiver)
        ch = self._channels.get(key)
        if ch is None:
            ch = self._channels[key] = deque()
        if not ch:
            self._ready_pos[key] = len(self._ready)
            self._ready.append(key)
        ch.append(msg)

    def _next(self) -> Message | None:
        if self._pending == 0:
            return None
        self._pending -= 1
        if self.policy == "sync":
            r = min(self._buckets)
            bucket = self._buckets[r]
            if not getattr(bucket, "_sorted", False):
                bucket.sort(key=lambda e: e[0], reverse=True)
                bucket = _SortedBucket(bucket)
                self._buckets[r] = bucket
            msg = bucket.pop()[1]
            if not bucket:
                del self._buckets[r]
            return msg
        i = self.rng.randrange(len(self._ready))
        key = self._ready[i]
        ch = self._channels[key]
        msg = ch.popleft()
        if not ch:
            last = self._ready.pop()
            if last != key:
                self._ready[i] = last
                self._ready_pos[last] = i
            del self._ready_pos[key]
        return msg

    def execute(self, program) -> Any:
        """Run a protocol driver until no messages remain."""
        self._phase = program.phase
        self._round = 0
        program.start(self)
        records = self.trace.records
        steps = self.trace.cpu_steps
        hosts = self.hosts
        fb = self.fidelity
        phase = self._phase
        while True:
            msg = self._next()
            if msg is None:
                break
            self._round = msg.round
            frags = fragments_for(msg.size_bytes) if fb else 1
            records.append((phase, msg.round, msg.sender, msg.receiver, msg.kind, msg.size_bytes, frags,
                            hosts[msg.sender] == hosts[msg.receiver]))
            steps[msg.receiver] += 1
            program.handle(self, msg)
        if not program.finished():
            raise Deadlock(f"phase {phase!r} stalled with no messages in flight")
        return program.result()


class _SortedBucket(list):
    _sorted = True
