"""Mid-connection wrenches and the tension/bending breakage criterion."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .beam import oriented_stiffness, rotation_for
from .domain import Configuration, NotAdjacent, Params
from .runtime import Runtime
from .tree import SpanningTree, converge_cast


def mid_connection_wrench(config: Configuration, p: int, q: int, u_p, u_q) -> np.ndarray:
    """Average of the two one-sided beam-end wrenches, in the (p, q) local frame.

    Local z points from q to p, so f_z > 0 is tension.
    """
    if q not in config.neighbors.get(p, ()):
        raise NotAdjacent((p, q))
    params = config.params
    a_pq, b_pq = oriented_stiffness(params, config.direction(p, q))
    a_qp, b_qp = oriented_stiffness(params, config.direction(q, p))
    u_p = np.asarray(u_p, dtype=float)
    u_q = np.asarray(u_q, dtype=float)
    f = a_pq @ u_p + b_pq @ u_q - a_qp @ u_q - b_qp @ u_p
    return 0.5 * rotation_for(config, p, q).T @ f


@dataclass(frozen=True)
class ConnectionReport:
    pair: tuple[int, int]
    orientation: str
    wrench: np.ndarray
    utilization: float
    breached: bool

    def row(self) -> list:
        w = self.wrench
        return [self.pair[0], self.pair[1], self.orientation, w[2], w[3], w[4], self.utilization, self.breached]


CSV_HEADER = ["p", "q", "orientation", "f_z", "m_x", "m_y", "utilization", "breached"]


def utilization(wrench, params: Params, vertical: bool) -> float:
    """(2 max(|m_x|, |m_y|) / L + f_z) / F_max; shear and torsion ignored."""
    fmax = params.strength_vertical if vertical else params.strength_lateral
    w = np.asarray(wrench, dtype=float)
    return float((2 * max(abs(w[3]), abs(w[4])) / params.edge_length + w[2]) / fmax)


def check_connection(config: Configuration, p: int, q: int, wrench) -> ConnectionReport:
    vertical = config.is_vertical(p, q)
    ut = utilization(wrench, config.params, vertical)
    return ConnectionReport((p, q), "vertical" if vertical else "lateral", np.asarray(wrench, dtype=float),
                            ut, ut >= 1.0)


def check_all(config: Configuration, u: dict[int, np.ndarray]) -> list[ConnectionReport]:
    return [check_connection(config, p, q, mid_connection_wrench(config, p, q, u[p], u[q]))
            for p, q in config.connections]


@dataclass(frozen=True)
class OverloadSummary:
    max_utilization: float
    breaches: int
    witness: tuple[int, int] | None

    @property
    def overloaded(self) -> bool:
        return self.breaches > 0

    def to_dict(self) -> dict:
        mu = self.max_utilization if np.isfinite(self.max_utilization) else None
        return {"max_utilization": mu, "breaches": self.breaches,
                "witness": None if self.witness is None else list(self.witness)}


def combine_summaries(a: OverloadSummary, b: OverloadSummary) -> OverloadSummary:
    witnesses = [w for w in (a.witness, b.witness) if w is not None]
    return OverloadSummary(max(a.max_utilization, b.max_utilization), a.breaches + b.breaches,
                           min(witnesses) if witnesses else None)


def summarize(reports) -> OverloadSummary:
    out = OverloadSummary(-np.inf, 0, None)
    for r in reports:
        out = combine_summaries(out, OverloadSummary(r.utilization, int(r.breached), r.pair if r.breached else None))
    return out


def local_reports(config: Configuration, p: int, snapshot) -> list[ConnectionReport]:
    """Connections that logical node p checks: those to higher-id neighbors.

    ``snapshot`` is (u_p, {q: u_q}) from the same Jacobi iteration.
    """
    u_p, nbrs = snapshot
    return [check_connection(config, p, q, mid_connection_wrench(config, p, q, u_p, nbrs[q]))
            for q in config.neighbors[p] if q > p]


@dataclass
class OverloadResult:
    summary: OverloadSummary
    reports: list[ConnectionReport]
    flagged: dict[int, bool]


def aggregate_verdict(config: Configuration, snapshots, rt: Runtime | None = None,
                      tree: SpanningTree | None = None) -> OverloadResult:
    """Check every connection once and fold the results to the centroid.

    With a runtime the fold is a converge-cast over the tree; each module
    flags its own breached connections locally.
    """
    per_node = {p: local_reports(config, p, snapshots[p]) for p in config.ids}
    reports = sorted((r for rs in per_node.values() for r in rs), key=lambda r: r.pair)
    flagged = {p: False for p in config.ids}
    for r in reports:
        if r.breached:
            flagged[r.pair[0]] = flagged[r.pair[1]] = True
    if rt is None:
        return OverloadResult(summarize(reports), reports, flagged)
    values = {}
    for p in config.real_ids:
        values[p] = summarize(r for v in [p] + rt.hosted[p] for r in per_node[v])
    summary = converge_cast(rt, tree, values, combine_summaries, phase="overload", tag="overload")
    return OverloadResult(summary, reports, flagged)


def reports_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        row = r.row()
        w.writerow(row[:3] + [repr(float(x)) for x in row[3:7]] + [int(row[7])])
    return buf.getvalue()
