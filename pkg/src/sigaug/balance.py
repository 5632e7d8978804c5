"""Balance-theory quantities on signed graphs.

A triangle is balanced iff the product of its three edge signs is positive.
The global balance degree is the balanced fraction over all triangles; the
local balance degree of an edge is (b - u) / (b + u) over the triangles
containing it, and its difficulty score is (1 - local) / 2 in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import EdgeSample, SignedGraph


@dataclass
class TriangleStats:
    """Balanced/unbalanced triangle totals for a whole graph."""

    balanced: int
    unbalanced: int

    @property
    def total(self) -> int:
        return self.balanced + self.unbalanced


@dataclass
class EdgeBalanceProfile:
    """Per-edge triangle counts and the derived difficulty score."""

    edge: EdgeSample
    balanced_incident: int
    unbalanced_incident: int
    local_degree: float
    difficulty: float


@dataclass
class BalanceReport:
    stats: TriangleStats
    profiles: list[EdgeBalanceProfile]

    @property
    def balance_degree(self) -> float | None:
        return global_balance_degree(self.stats)


def _edge_triangle_counts(
    graph: SignedGraph, u: int, v: int, sign: int
) -> tuple[int, int]:
    """(balanced, unbalanced) triangle counts over common neighbors of u, v."""
    ids_u, signs_u = graph.neighbors(u)
    ids_v, signs_v = graph.neighbors(v)
    common, iu, iv = np.intersect1d(ids_u, ids_v, assume_unique=True, return_indices=True)
    if len(common) == 0:
        return 0, 0
    prod = sign * signs_u[iu].astype(np.int64) * signs_v[iv].astype(np.int64)
    balanced = int(np.count_nonzero(prod > 0))
    return balanced, len(common) - balanced


def enumerate_triangles(graph: SignedGraph) -> TriangleStats:
    """Count balanced/unbalanced triangles by neighbor-set intersection.

    Each unordered triple {i, j, k} with all three edges present is counted
    exactly once: for every edge (i, j) with i < j, only common neighbors
    k > j contribute.
    """
    balanced = 0
    unbalanced = 0
    for e in graph.edges():
        ids_u, signs_u = graph.neighbors(e.u)
        ids_v, signs_v = graph.neighbors(e.v)
        common, iu, iv = np.intersect1d(
            ids_u, ids_v, assume_unique=True, return_indices=True
        )
        above = common > e.v
        if not above.any():
            continue
        prod = e.sign * signs_u[iu[above]].astype(np.int64) * signs_v[iv[above]].astype(np.int64)
        b = int(np.count_nonzero(prod > 0))
        balanced += b
        unbalanced += len(prod) - b
    return TriangleStats(balanced=balanced, unbalanced=unbalanced)


def global_balance_degree(stats: TriangleStats) -> float | None:
    """Balanced fraction of all triangles; None when the graph has none."""
    if stats.total == 0:
        return None
    return stats.balanced / stats.total


def _profile(edge: EdgeSample, balanced: int, unbalanced: int) -> EdgeBalanceProfile:
    total = balanced + unbalanced
    # An edge in no triangle carries no imbalance evidence: treat as easiest.
    local = 1.0 if total == 0 else (balanced - unbalanced) / total
    return EdgeBalanceProfile(
        edge=edge,
        balanced_incident=balanced,
        unbalanced_incident=unbalanced,
        local_degree=local,
        difficulty=(1.0 - local) / 2.0,
    )


def local_balance_degree(graph: SignedGraph, edge: EdgeSample) -> EdgeBalanceProfile:
    """Balance profile of one existing edge."""
    edge = edge.canonical()
    stored = graph.sign_of(edge.u, edge.v)
    if stored == 0:
        raise ValueError(f"edge ({edge.u}, {edge.v}) not in graph")
    if stored != edge.sign:
        raise ValueError(f"edge ({edge.u}, {edge.v}) has sign {stored}, not {edge.sign}")
    b, u = _edge_triangle_counts(graph, edge.u, edge.v, edge.sign)
    return _profile(edge, b, u)


def balance_report(graph: SignedGraph) -> BalanceReport:
    """Global triangle stats plus a profile for every edge, in one pass.

    Per-edge incident counts sum to three times the global totals (each
    triangle touches three edges).
    """
    balanced = 0
    unbalanced = 0
    profiles: list[EdgeBalanceProfile] = []
    for e in graph.edges():
        ids_u, signs_u = graph.neighbors(e.u)
        ids_v, signs_v = graph.neighbors(e.v)
        common, iu, iv = np.intersect1d(
            ids_u, ids_v, assume_unique=True, return_indices=True
        )
        if len(common):
            prod = e.sign * signs_u[iu].astype(np.int64) * signs_v[iv].astype(np.int64)
            b_all = int(np.count_nonzero(prod > 0))
            u_all = len(prod) - b_all
            above = common > e.v
            b_top = int(np.count_nonzero(prod[above] > 0))
            balanced += b_top
            unbalanced += int(above.sum()) - b_top
        else:
            b_all = u_all = 0
        profiles.append(_profile(e, b_all, u_all))
    return BalanceReport(TriangleStats(balanced, unbalanced), profiles)
