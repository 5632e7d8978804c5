"""Shared fixtures: synthetic signed graphs and benchmark-dataset discovery."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from sigaug.graph import EdgeSample, graph_from_samples

REPO_ROOT = Path(__file__).resolve().parent.parent

DATASET_FILES = {
    "bitcoin-alpha": "soc-sign-bitcoinalpha.csv",
    "bitcoin-otc": "soc-sign-bitcoinotc.csv",
}


def dataset_file(name: str) -> Path | None:
    """Locate a benchmark dataset under $SIGAUG_DATA_DIR or ./datasets."""
    dirs = []
    env = os.environ.get("SIGAUG_DATA_DIR")
    if env:
        dirs.append(Path(env))
    dirs.append(REPO_ROOT / "datasets")
    for base in dirs:
        candidate = base / DATASET_FILES[name]
        if candidate.exists():
            return candidate
    return None


def community_records(
    n: int = 40,
    seed: int = 0,
    p_intra: float = 0.25,
    p_inter: float = 0.12,
    flip: float = 0.05,
) -> list[EdgeSample]:
    """Two antagonistic communities: + inside, - across, with sign noise.

    Returns deduplicated undirected samples (u < v).
    """
    rng = np.random.default_rng(seed)
    half = n // 2
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            same = (u < half) == (v < half)
            if rng.random() < (p_intra if same else p_inter):
                sign = 1 if same else -1
                if rng.random() < flip:
                    sign = -sign
                edges.append(EdgeSample(u, v, sign))
    return edges


def random_signed_records(
    rng: np.random.Generator,
    n: int,
    edge_prob: float = 0.25,
    pos_frac: float = 0.7,
) -> list[EdgeSample]:
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < edge_prob:
                edges.append(EdgeSample(u, v, 1 if rng.random() < pos_frac else -1))
    return edges


@pytest.fixture
def small_community():
    edges = community_records(n=30, seed=3, p_intra=0.3, p_inter=0.15, flip=0.06)
    return edges, graph_from_samples(edges, 30)


def brute_force_triangles(edges: list[EdgeSample], num_nodes: int) -> tuple[int, int]:
    """O(n^3) oracle: scan every node triple for balanced/unbalanced triangles."""
    sign = {}
    for e in edges:
        sign[e.pair] = e.sign
    balanced = unbalanced = 0
    for i in range(num_nodes):
        for j in range(i + 1, num_nodes):
            s_ij = sign.get((i, j))
            if s_ij is None:
                continue
            for k in range(j + 1, num_nodes):
                s_ik = sign.get((i, k))
                s_jk = sign.get((j, k))
                if s_ik is None or s_jk is None:
                    continue
                if s_ij * s_ik * s_jk > 0:
                    balanced += 1
                else:
                    unbalanced += 1
    return balanced, unbalanced
