"""Difficulty-ordered curriculum training.

Training edges are scored once on the (augmented) training graph by how
contradicted they are by balance theory, sorted easiest first, and exposed to
the model through a growing prefix: at epoch t the first ceil(g(t) * N)
edges are used, where g is a linear pacing function that starts at lambda0
and reaches 1 at epoch T.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .balance import balance_report
from .encoder import EncoderConfig, EncoderState, _train_loop, init_state
from .graph import EdgeSample, SignedGraph


@dataclass
class PacingConfig:
    """Linear pacing: g(t) = min(1, lambda0 + (1 - lambda0) * t / big_t)."""

    lambda0: float = 0.25
    big_t: int = 150
    total_epochs: int = 300

    def __post_init__(self):
        if not 0.0 < self.lambda0 <= 1.0:
            raise ValueError(f"lambda0 must be in (0, 1], got {self.lambda0}")
        if self.total_epochs < 1:
            raise ValueError("total_epochs must be >= 1")
        if not 1 <= self.big_t <= self.total_epochs:
            raise ValueError(
                f"big_t must be in [1, total_epochs={self.total_epochs}], got {self.big_t}"
            )


@dataclass
class CurriculumSchedule:
    """Edges sorted by (difficulty ascending, u, v) with parallel scores."""

    ordered_edges: list[EdgeSample]
    difficulties: list[float]


def pacing(t: int, config: PacingConfig) -> float:
    """Exposed fraction of the sorted training set at epoch t >= 0."""
    if t < 0:
        raise ValueError("epoch index must be >= 0")
    if t >= config.big_t:
        return 1.0  # saturation is exact, immune to float rounding
    return min(1.0, config.lambda0 + (1.0 - config.lambda0) * t / config.big_t)


def score_and_sort(graph: SignedGraph, train: Sequence[EdgeSample]) -> CurriculumSchedule:
    """Difficulty-score every training edge on ``graph`` and sort ascending.

    Every train edge must be present in the graph.  Ties are broken by the
    canonical (u, v) pair, so the order is a deterministic function of the
    edge multiset.
    """
    report = balance_report(graph)
    by_pair = {p.edge.pair: p.difficulty for p in report.profiles}
    scored = []
    for e in train:
        e = e.canonical()
        difficulty = by_pair.get(e.pair)
        if difficulty is None:
            raise ValueError(f"train edge ({e.u}, {e.v}) not in scoring graph")
        scored.append((difficulty, e))
    scored.sort(key=lambda item: (item[0], item[1].u, item[1].v))
    return CurriculumSchedule(
        ordered_edges=[e for _, e in scored],
        difficulties=[difficulty for difficulty, _ in scored],
    )


def subset_size(n_edges: int, t: int, config: PacingConfig) -> int:
    return max(1, math.ceil(pacing(t, config) * n_edges))


def subset_at_epoch(
    schedule: CurriculumSchedule, t: int, config: PacingConfig
) -> list[EdgeSample]:
    """The easiest ceil(g(t) * N) edges (never empty)."""
    return schedule.ordered_edges[: subset_size(len(schedule.ordered_edges), t, config)]


def train_with_curriculum(
    graph: SignedGraph,
    schedule: CurriculumSchedule,
    enc_cfg: EncoderConfig,
    pace_cfg: PacingConfig,
) -> EncoderState:
    """Train on growing easiest-first prefixes of the schedule.

    Epoch t trains on ``subset_at_epoch(schedule, t)`` plus an equal number
    of resampled no-edge pairs, for ``pace_cfg.total_epochs`` epochs.  With
    lambda0 = 1 this reduces exactly to plain full-set training on the
    schedule order.
    """
    if not schedule.ordered_edges:
        raise ValueError("schedule is empty")
    cfg = replace(enc_cfg, epochs=pace_cfg.total_epochs)
    state = init_state(graph, cfg)
    edges = schedule.ordered_edges
    n = len(edges)
    return _train_loop(graph, state, cfg, edges, lambda t: subset_size(n, t, pace_cfg))


def schedule_to_csv(schedule: CurriculumSchedule, path: str | Path) -> None:
    """Write ``rank,u,v,sign,difficulty`` rows for inspection/plotting."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "u", "v", "sign", "difficulty"])
        for rank, (edge, diff) in enumerate(
            zip(schedule.ordered_edges, schedule.difficulties)
        ):
            writer.writerow([rank, edge.u, edge.v, edge.sign, f"{diff:.6f}"])
