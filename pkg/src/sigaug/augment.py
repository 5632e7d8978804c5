"""Structure augmentation: propose edge edits from the pair classifier, keep
the ones balance theory endorses.

Candidate additions are node pairs whose predicted edge probability clears an
add threshold; candidate deletions are training edges whose own-sign
probability falls below a delete threshold.  Deletions are always applied
(removing an edge never creates a triangle); an addition survives only if
every triangle it would close is balanced, checked against the working graph
as it evolves, most confident candidates first.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .balance import balance_report
from .encoder import (
    CLASS_NEG,
    CLASS_POS,
    EncoderConfig,
    EncoderState,
    pair_class_probabilities,
    train_encoder,
)
from .graph import NEG, POS, EdgeSample, SignedGraph, density, graph_from_samples

log = logging.getLogger(__name__)

_SCAN_CHUNK = 200_000
_ALL_PAIRS_NODE_LIMIT = 10_000


@dataclass
class AugmentConfig:
    """Probability thresholds and scan scope for candidate generation.

    Add thresholds live in (0, 1] and delete thresholds in [0, 1) so the
    extremes (add at 1.0, delete at 0.0) express an exact no-op.
    """

    eps_add_pos: float = 0.9
    eps_add_neg: float = 0.9
    eps_del_pos: float = 0.2
    eps_del_neg: float = 0.2
    candidate_scope: str = "two-hop"
    max_additions: int | None = None

    def __post_init__(self):
        for name in ("eps_add_pos", "eps_add_neg"):
            val = getattr(self, name)
            if not 0.0 < val <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {val}")
            if val <= 0.5:
                log.warning("%s=%.3f is <= 0.5; expect many addition candidates", name, val)
        for name in ("eps_del_pos", "eps_del_neg"):
            val = getattr(self, name)
            if not 0.0 <= val < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {val}")
        if self.candidate_scope not in ("two-hop", "all-pairs"):
            raise ValueError(f"unknown candidate_scope {self.candidate_scope!r}")
        if self.max_additions is not None and self.max_additions < 0:
            raise ValueError("max_additions must be >= 0")


@dataclass
class CandidateSets:
    """Proposed edits: additions carry the winning class probability."""

    additions: list[tuple[EdgeSample, float]]
    deletions: list[EdgeSample]


@dataclass
class AugmentationLog:
    added_pos: int = 0
    added_neg: int = 0
    deleted_pos: int = 0
    deleted_neg: int = 0
    rejected: int = 0
    candidate_additions: int = 0
    candidate_deletions: int = 0
    bd_before: float | None = None
    bd_after: float | None = None
    density_before: float = 0.0
    density_after: float = 0.0
    pretrain_loss: list[float] = field(default_factory=list)


def _two_hop_pairs(graph: SignedGraph) -> tuple[np.ndarray, np.ndarray]:
    """All (i < j) pairs sharing at least one neighbor, existing edges included."""
    adj = graph.adjacency(POS, normalized=False) + graph.adjacency(NEG, normalized=False)
    reach = (adj @ adj).tocoo()
    mask = reach.row < reach.col
    return reach.row[mask].astype(np.int64), reach.col[mask].astype(np.int64)


def _all_pairs(num_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    iu = np.triu_indices(num_nodes, k=1)
    return iu[0].astype(np.int64), iu[1].astype(np.int64)


def generate_candidates(
    graph: SignedGraph,
    state: EncoderState,
    train: Sequence[EdgeSample],
    config: AugmentConfig,
) -> CandidateSets:
    """Threshold the pair classifier into addition/deletion candidates.

    A scanned pair becomes an addition candidate when its positive (negative)
    probability exceeds the matching add threshold; if both fire the higher
    probability wins, positive on a tie.  Pairs already in the training set
    with the same sign are excluded.  Additions come back sorted by
    confidence (descending, then pair) and truncated to ``max_additions``.
    """
    if state.epochs_trained == 0:
        raise ValueError("encoder state is untrained; train it before generating candidates")
    if config.candidate_scope == "all-pairs":
        if graph.num_nodes > _ALL_PAIRS_NODE_LIMIT:
            raise ValueError(
                f"all-pairs scan limited to {_ALL_PAIRS_NODE_LIMIT} nodes; "
                f"graph has {graph.num_nodes}"
            )
        us, vs = _all_pairs(graph.num_nodes)
    else:
        us, vs = _two_hop_pairs(graph)

    train_signs = {e.pair: e.sign for e in train}
    additions: list[tuple[EdgeSample, float]] = []
    for lo in range(0, len(us), _SCAN_CHUNK):
        cu = us[lo : lo + _SCAN_CHUNK]
        cv = vs[lo : lo + _SCAN_CHUNK]
        probs = pair_class_probabilities(state, cu, cv)
        p_pos = probs[:, CLASS_POS]
        p_neg = probs[:, CLASS_NEG]
        fire_pos = p_pos > config.eps_add_pos
        fire_neg = p_neg > config.eps_add_neg
        # higher probability wins when both clear; positive wins ties
        pick_neg = fire_neg & (~fire_pos | (p_neg > p_pos))
        pick_pos = fire_pos & ~pick_neg
        for idx in np.flatnonzero(pick_pos | pick_neg):
            sign = NEG if pick_neg[idx] else POS
            pair = (int(cu[idx]), int(cv[idx]))
            if train_signs.get(pair) == sign:
                continue
            conf = float(p_neg[idx] if sign == NEG else p_pos[idx])
            additions.append((EdgeSample(pair[0], pair[1], sign), conf))
    additions.sort(key=lambda item: (-item[1], item[0].u, item[0].v))
    if config.max_additions is not None:
        additions = additions[: config.max_additions]

    deletions: list[EdgeSample] = []
    if train:
        eu = np.asarray([e.pair[0] for e in train], dtype=np.int64)
        ev = np.asarray([e.pair[1] for e in train], dtype=np.int64)
        probs = pair_class_probabilities(state, eu, ev)
        for e, p in zip(train, probs):
            if e.sign == POS and p[CLASS_POS] < config.eps_del_pos:
                deletions.append(e.canonical())
            elif e.sign == NEG and p[CLASS_NEG] < config.eps_del_neg:
                deletions.append(e.canonical())
    return CandidateSets(additions=additions, deletions=deletions)


def select_beneficial(
    train: Sequence[EdgeSample],
    candidates: CandidateSets,
    log_counts: AugmentationLog | None = None,
) -> list[EdgeSample]:
    """Apply deletions, then additions that close only balanced triangles.

    Additions are processed in the given (confidence-descending) order
    against the evolving working graph, so an accepted edge is visible to
    every later balance check.  Candidates whose pair is already occupied
    are skipped.
    """
    counts = log_counts if log_counts is not None else AugmentationLog()
    adj: dict[int, dict[int, int]] = {}

    def put(u: int, v: int, sign: int) -> None:
        adj.setdefault(u, {})[v] = sign
        adj.setdefault(v, {})[u] = sign

    def drop(u: int, v: int) -> None:
        adj.get(u, {}).pop(v, None)
        adj.get(v, {}).pop(u, None)

    kept: list[EdgeSample] = []
    deleted = {d.pair for d in candidates.deletions}
    for e in train:
        e = e.canonical()
        if e.pair in deleted:
            if e.sign == POS:
                counts.deleted_pos += 1
            else:
                counts.deleted_neg += 1
            continue
        if e.pair[0] in adj and e.pair[1] in adj[e.pair[0]]:
            continue  # duplicate record in input
        put(e.u, e.v, e.sign)
        kept.append(e)

    accepted: list[EdgeSample] = []
    for cand, _conf in candidates.additions:
        u, v = cand.pair
        if v in adj.get(u, {}):
            continue  # pair occupied (same or opposite sign)
        nbrs_u = adj.get(u, {})
        nbrs_v = adj.get(v, {})
        if len(nbrs_v) < len(nbrs_u):
            nbrs_u, nbrs_v = nbrs_v, nbrs_u
        ok = True
        for k, s_uk in nbrs_u.items():
            s_vk = nbrs_v.get(k)
            if s_vk is not None and cand.sign * s_uk * s_vk < 0:
                ok = False
                break
        if not ok:
            counts.rejected += 1
            continue
        put(u, v, cand.sign)
        accepted.append(EdgeSample(u, v, cand.sign))
        if cand.sign == POS:
            counts.added_pos += 1
        else:
            counts.added_neg += 1
    return kept + accepted


def augment(
    graph: SignedGraph,
    train: Sequence[EdgeSample],
    enc_cfg: EncoderConfig,
    aug_cfg: AugmentConfig,
    pretrained: EncoderState | None = None,
) -> tuple[list[EdgeSample], AugmentationLog]:
    """Full structure-augmentation pass over a training edge set.

    ``graph`` must contain exactly the training edges (over the full node
    universe).  A freshly trained encoder scores candidates unless a
    ``pretrained`` state (from the same graph and config) is supplied.
    """
    logrec = AugmentationLog()
    state = pretrained if pretrained is not None else train_encoder(graph, train, enc_cfg)
    logrec.pretrain_loss = list(state.loss_history)
    candidates = generate_candidates(graph, state, train, aug_cfg)
    logrec.candidate_additions = len(candidates.additions)
    logrec.candidate_deletions = len(candidates.deletions)
    augmented = select_beneficial(train, candidates, log_counts=logrec)

    report_before = balance_report(graph)
    logrec.bd_before = report_before.balance_degree
    logrec.density_before = density(graph)
    after_graph = graph_from_samples(augmented, graph.num_nodes)
    report_after = balance_report(after_graph)
    logrec.bd_after = report_after.balance_degree
    logrec.density_after = density(after_graph)
    log.info(
        "augment: +%d/-%d edges (%d rejected), balance %.4f -> %.4f",
        logrec.added_pos + logrec.added_neg,
        logrec.deleted_pos + logrec.deleted_neg,
        logrec.rejected,
        -1 if logrec.bd_before is None else logrec.bd_before,
        -1 if logrec.bd_after is None else logrec.bd_after,
    )
    return augmented, logrec
