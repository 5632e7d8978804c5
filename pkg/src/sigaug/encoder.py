"""Two-track signed graph convolutional encoder with a 3-class pair classifier.

The encoder keeps separate "friendly" and "hostile" embedding tracks.  Layer 1
aggregates positive neighbors into the friendly track and negative neighbors
into the hostile track; deeper layers cross-wire them (a friend's enemy feeds
the hostile track and vice versa):

    layer 1:   H_pos = relu(W_pos [A+ H0, H0])
               H_neg = relu(W_neg [A- H0, H0])
    layer l>1: H_pos = relu(W_pos [A+ H_pos', A- H_neg', H_pos'])
               H_neg = relu(W_neg [A+ H_neg', A- H_pos', H_neg'])

A+ / A- are row-normalized positive/negative adjacencies (zero-degree rows
stay zero) and the final embedding is Z = [H_pos, H_neg].  Node pairs are
classified into {positive edge, negative edge, no edge} by a multinomial
logistic layer on the concatenated pair embedding [z_u, z_v]; training
minimizes the mean negative log softmax over labeled edges plus freshly
resampled non-adjacent pairs for the no-edge class.

Gradients are hand-derived reverse mode over this closed-form architecture;
training is full batch and deterministic for a fixed seed.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import sparse

from .graph import NEG, POS, EdgeSample, SignedGraph

# class-column order of the pair classifier
CLASS_POS, CLASS_NEG, CLASS_NONE = 0, 1, 2
LABEL_TO_CLASS = {POS: CLASS_POS, NEG: CLASS_NEG, 0: CLASS_NONE}

_CHECKPOINT_MAGIC = b"SIGAUG01"
_CHECKPOINT_VERSION = 1


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; carries the offending epoch index."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged at epoch {epoch} (non-finite loss)")
        self.epoch = epoch


@dataclass
class EncoderConfig:
    """Architecture and optimization knobs.

    ``input_features`` picks the fixed H0: ``spectral`` (truncated SVD of the
    signed adjacency, the strongest signal and the default), ``seeded-random``
    (uniform noise; nodes are distinguishable only through their
    neighborhoods), or ``adjacency-rows`` (signed adjacency rows; only viable
    for small graphs since H0 becomes |V| wide).
    """

    embed_dim: int = 64
    layers: int = 2
    learning_rate: float = 0.01
    epochs: int = 300
    optimizer: str = "adam"
    seed: int = 0
    input_features: str = "spectral"

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if self.embed_dim < 2:
            raise ValueError("embed_dim must be >= 2")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.input_features not in ("spectral", "seeded-random", "adjacency-rows"):
            raise ValueError(f"unknown input_features {self.input_features!r}")


@dataclass
class EncoderState:
    """All learnable parameters plus the fixed input features.

    ``pos_weights[l]`` / ``neg_weights[l]`` are the track weights of layer
    l+1; ``mlg_weights`` maps a concatenated pair embedding (width 2 * zdim)
    to the three class scores.  ``embeddings`` is filled by ``forward`` and
    kept in sync after training.
    """

    pos_weights: list[np.ndarray]
    neg_weights: list[np.ndarray]
    mlg_weights: np.ndarray
    input_features: np.ndarray
    embeddings: np.ndarray | None = None
    init_weight_norm: float = 0.0
    epochs_trained: int = 0
    loss_history: list[float] = field(default_factory=list)

    @property
    def embed_dim(self) -> int:
        return self.pos_weights[-1].shape[0]

    @property
    def num_layers(self) -> int:
        return len(self.pos_weights)

    @property
    def num_nodes(self) -> int:
        return self.input_features.shape[0]

    def parameters(self) -> list[np.ndarray]:
        return [*self.pos_weights, *self.neg_weights, self.mlg_weights]

    def weight_norm(self) -> float:
        return math.sqrt(sum(float((p * p).sum()) for p in self.parameters()))


@dataclass
class EdgeProbabilities:
    p_pos: float
    p_neg: float
    p_none: float


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(stream,)))
    )


def _glorot(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


def _spectral_features(graph: SignedGraph, dim: int, seed: int) -> np.ndarray:
    """Truncated SVD of the signed adjacency, scaled by singular values.

    Deterministic for a fixed seed (fixed ARPACK start vector, canonical
    column signs); columns beyond the attainable rank are zero.
    """
    n = graph.num_nodes
    feats = np.zeros((n, dim))
    k = min(dim, n - 1)
    if k < 1 or graph.edge_count == 0:
        return feats
    rng = _rng(seed, stream=2)
    v0 = rng.standard_normal(n)
    u, s, _ = sparse.linalg.svds(graph.signed_adjacency(), k=k, v0=v0)
    order = np.argsort(-s)
    u, s = u[:, order], s[order]
    for j in range(u.shape[1]):
        pivot = int(np.argmax(np.abs(u[:, j])))
        if u[pivot, j] < 0:
            u[:, j] = -u[:, j]
    feats[:, :k] = u * s
    return feats


def init_state(graph: SignedGraph, config: EncoderConfig) -> EncoderState:
    """Seeded uniform Glorot weights and input features."""
    rng = _rng(config.seed, stream=0)
    n, d = graph.num_nodes, config.embed_dim
    if config.input_features == "spectral":
        h0 = _spectral_features(graph, d, config.seed)
    elif config.input_features == "seeded-random":
        h0 = rng.uniform(-1.0, 1.0, size=(n, d))
    else:
        h0 = graph.signed_adjacency().toarray()
    d0 = h0.shape[1]
    pos_weights: list[np.ndarray] = []
    neg_weights: list[np.ndarray] = []
    for layer in range(config.layers):
        fan_in = 2 * d0 if layer == 0 else 3 * d
        pos_weights.append(_glorot(rng, d, fan_in))
        neg_weights.append(_glorot(rng, d, fan_in))
    theta = _glorot(rng, 4 * d, 3).reshape(4 * d, 3)
    state = EncoderState(
        pos_weights=pos_weights,
        neg_weights=neg_weights,
        mlg_weights=theta,
        input_features=h0,
    )
    state.init_weight_norm = state.weight_norm()
    return state


# -- forward / backward ---------------------------------------------------


def _adjacency_pair(graph: SignedGraph) -> tuple[sparse.csr_matrix, sparse.csr_matrix]:
    return graph.adjacency(POS), graph.adjacency(NEG)


def _forward(
    a_pos: sparse.csr_matrix,
    a_neg: sparse.csr_matrix,
    state: EncoderState,
    keep_caches: bool = False,
):
    h_pos = h_neg = None
    caches = []
    h0 = state.input_features
    for layer, (w_pos, w_neg) in enumerate(zip(state.pos_weights, state.neg_weights)):
        if layer == 0:
            x_pos = np.hstack([a_pos @ h0, h0])
            x_neg = np.hstack([a_neg @ h0, h0])
        else:
            x_pos = np.hstack([a_pos @ h_pos, a_neg @ h_neg, h_pos])
            x_neg = np.hstack([a_pos @ h_neg, a_neg @ h_pos, h_neg])
        with np.errstate(over="ignore", invalid="ignore"):
            pre_pos = x_pos @ w_pos.T
            pre_neg = x_neg @ w_neg.T
        if not (np.isfinite(pre_pos).all() and np.isfinite(pre_neg).all()):
            raise FloatingPointError(f"non-finite activations at layer {layer + 1}")
        h_pos = np.maximum(pre_pos, 0.0)
        h_neg = np.maximum(pre_neg, 0.0)
        if keep_caches:
            caches.append((x_pos, pre_pos, x_neg, pre_neg))
    z = np.hstack([h_pos, h_neg])
    return z, caches


def forward(graph: SignedGraph, state: EncoderState) -> np.ndarray:
    """Run message passing and return (and store) the embedding matrix Z."""
    a_pos, a_neg = _adjacency_pair(graph)
    z, _ = _forward(a_pos, a_neg, state)
    state.embeddings = z
    return z


def _backward(
    a_pos_t: sparse.csr_matrix,
    a_neg_t: sparse.csr_matrix,
    state: EncoderState,
    caches,
    d_hpos: np.ndarray,
    d_hneg: np.ndarray,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    d = state.embed_dim
    n_layers = state.num_layers
    g_pos: list[np.ndarray] = [np.empty(0)] * n_layers
    g_neg: list[np.ndarray] = [np.empty(0)] * n_layers
    for layer in reversed(range(n_layers)):
        x_pos, pre_pos, x_neg, pre_neg = caches[layer]
        dpre_pos = d_hpos * (pre_pos > 0)
        dpre_neg = d_hneg * (pre_neg > 0)
        g_pos[layer] = dpre_pos.T @ x_pos
        g_neg[layer] = dpre_neg.T @ x_neg
        if layer == 0:
            break  # input features are fixed
        dx_pos = dpre_pos @ state.pos_weights[layer]
        dx_neg = dpre_neg @ state.neg_weights[layer]
        # x_pos blocks: [A+ h_pos', A- h_neg', h_pos']
        d_hpos_prev = a_pos_t @ dx_pos[:, :d] + dx_pos[:, 2 * d :]
        d_hneg_prev = a_neg_t @ dx_pos[:, d : 2 * d]
        # x_neg blocks: [A+ h_neg', A- h_pos', h_neg']
        d_hneg_prev = d_hneg_prev + a_pos_t @ dx_neg[:, :d] + dx_neg[:, 2 * d :]
        d_hpos_prev = d_hpos_prev + a_neg_t @ dx_neg[:, d : 2 * d]
        d_hpos, d_hneg = d_hpos_prev, d_hneg_prev
    return g_pos, g_neg


def _as_index_arrays(
    samples: Sequence[tuple[int, int, int]] | Sequence[EdgeSample],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if len(samples) == 0:
        raise ValueError("empty sample set")
    us, vs, cls = [], [], []
    for s in samples:
        if isinstance(s, EdgeSample):
            u, v, label = s.u, s.v, s.sign
        else:
            u, v, label = s
        us.append(u)
        vs.append(v)
        cls.append(LABEL_TO_CLASS[label])
    return (
        np.asarray(us, dtype=np.int64),
        np.asarray(vs, dtype=np.int64),
        np.asarray(cls, dtype=np.int64),
    )


def _pair_logits(z: np.ndarray, theta: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    # project once (n x 3), then gather per pair; far cheaper than gathering
    # (m x zdim) embedding rows for large sample batches
    zdim = z.shape[1]
    z_top = z @ theta[:zdim]
    z_bot = z @ theta[zdim:]
    return z_top[u] + z_bot[v]


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    expv = np.exp(shifted)
    return expv / expv.sum(axis=1, keepdims=True)


def mlg_loss(
    z: np.ndarray,
    samples: Sequence[tuple[int, int, int]] | Sequence[EdgeSample],
    theta: np.ndarray,
) -> float:
    """Mean negative log softmax of the true class over labeled pairs.

    Accepts EdgeSample (label = sign) or (u, v, label) tuples with label in
    {+1, -1, 0}; 0 means "no edge".
    """
    u, v, cls = _as_index_arrays(samples)
    logits = _pair_logits(z, theta, u, v)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    nll = log_norm - shifted[np.arange(len(u)), cls]
    return float(nll.mean())


def _loss_and_mlg_grads(
    z: np.ndarray, theta: np.ndarray, u: np.ndarray, v: np.ndarray, cls: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss plus gradients w.r.t. theta and Z for one full batch."""
    m = len(u)
    zdim = z.shape[1]
    with np.errstate(over="ignore", invalid="ignore"):
        logits = _pair_logits(z, theta, u, v)
        shifted = logits - logits.max(axis=1, keepdims=True)
        expv = np.exp(shifted)
        norm = expv.sum(axis=1)
        loss = float((np.log(norm) - shifted[np.arange(m), cls]).mean())
    dlogits = expv / norm[:, None]
    dlogits[np.arange(m), cls] -= 1.0
    dlogits /= m
    mu = np.zeros((z.shape[0], 3))
    mv = np.zeros((z.shape[0], 3))
    np.add.at(mu, u, dlogits)
    np.add.at(mv, v, dlogits)
    g_theta = np.vstack([z.T @ mu, z.T @ mv])
    dz = mu @ theta[:zdim].T + mv @ theta[zdim:].T
    return loss, g_theta, dz


# -- optimizer -------------------------------------------------------------


class _Optimizer:
    """Full-batch Adam (0.9, 0.999, 1e-8) or plain SGD, updating in place."""

    def __init__(self, kind: str, lr: float, params: list[np.ndarray]):
        self.kind = kind
        self.lr = lr
        self.params = params
        self.t = 0
        if kind == "adam":
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        if self.kind == "sgd":
            for p, g in zip(self.params, grads):
                p -= self.lr * g
            return
        b1, b2, eps = 0.9, 0.999, 1e-8
        correct1 = 1.0 - b1**self.t
        correct2 = 1.0 - b2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p -= self.lr * (m / correct1) / (np.sqrt(v / correct2) + eps)


# -- no-edge pair sampling --------------------------------------------------


def _edge_keys(graph: SignedGraph) -> np.ndarray:
    keys = [u * graph.num_nodes + v for u, v in (e.pair for e in graph.edges())]
    return np.sort(np.asarray(keys, dtype=np.int64))


def _sample_absent_pairs(
    rng: np.random.Generator, num_nodes: int, edge_keys: np.ndarray, count: int
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform non-adjacent (u < v) pairs, with replacement, rejection-sampled."""
    got_u: list[np.ndarray] = []
    got_v: list[np.ndarray] = []
    need = count
    for _ in range(50):
        if need <= 0:
            break
        k = max(64, 2 * need)
        a = rng.integers(0, num_nodes, size=k)
        b = rng.integers(0, num_nodes, size=k)
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        keys = lo * num_nodes + hi
        pos = np.searchsorted(edge_keys, keys)
        pos_clipped = np.minimum(pos, len(edge_keys) - 1) if len(edge_keys) else pos
        present = (
            (pos < len(edge_keys)) & (edge_keys[pos_clipped] == keys)
            if len(edge_keys)
            else np.zeros(k, dtype=bool)
        )
        valid = (lo != hi) & ~present
        take = min(int(valid.sum()), need)
        if take:
            idx = np.flatnonzero(valid)[:take]
            got_u.append(lo[idx])
            got_v.append(hi[idx])
            need -= take
    if not got_u:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(got_u), np.concatenate(got_v)


# -- training ---------------------------------------------------------------


def _train_loop(
    graph: SignedGraph,
    state: EncoderState,
    config: EncoderConfig,
    samples: Sequence[EdgeSample],
    size_for_epoch: Callable[[int], int],
) -> EncoderState:
    """Shared full-batch loop over prefixes of a fixed sample order.

    Epoch t trains on the first ``size_for_epoch(t)`` samples plus an equal
    number of freshly drawn no-edge pairs; plain training uses the full
    length every epoch.
    """
    a_pos, a_neg = _adjacency_pair(graph)
    a_pos_t = a_pos.T.tocsr()
    a_neg_t = a_neg.T.tocsr()
    edge_keys = _edge_keys(graph)
    rng = _rng(config.seed, stream=1)
    params = state.parameters()
    opt = _Optimizer(config.optimizer, config.learning_rate, params)
    d = state.embed_dim
    u_all, v_all, cls_all = _as_index_arrays(samples)
    for epoch in range(config.epochs):
        k = min(size_for_epoch(epoch), len(u_all))
        u, v, cls = u_all[:k], v_all[:k], cls_all[:k]
        qu, qv = _sample_absent_pairs(rng, graph.num_nodes, edge_keys, k)
        if len(qu):
            u = np.concatenate([u, qu])
            v = np.concatenate([v, qv])
            cls = np.concatenate([cls, np.full(len(qu), CLASS_NONE, dtype=np.int64)])
        try:
            z, caches = _forward(a_pos, a_neg, state, keep_caches=True)
            loss, g_theta, dz = _loss_and_mlg_grads(z, state.mlg_weights, u, v, cls)
        except FloatingPointError as exc:
            raise TrainingDivergedError(epoch) from exc
        if not math.isfinite(loss):
            raise TrainingDivergedError(epoch)
        g_pos, g_neg = _backward(a_pos_t, a_neg_t, state, caches, dz[:, :d], dz[:, d:])
        opt.step([*g_pos, *g_neg, g_theta])
        state.loss_history.append(loss)
    state.epochs_trained += config.epochs
    z, _ = _forward(a_pos, a_neg, state)
    state.embeddings = z
    return state


def train_encoder(
    graph: SignedGraph, train: Sequence[EdgeSample], config: EncoderConfig
) -> EncoderState:
    """Jointly train encoder and pair classifier, full batch.

    Each epoch uses every training edge plus an equal number of freshly
    sampled non-adjacent pairs as no-edge examples.  The per-epoch loss is
    recorded in ``state.loss_history``.
    """
    if len(train) == 0:
        raise ValueError("training edge list is empty")
    state = init_state(graph, config)
    return _train_loop(graph, state, config, train, lambda _epoch: len(train))


# -- prediction --------------------------------------------------------------


def pair_class_probabilities(
    state: EncoderState, u: np.ndarray, v: np.ndarray
) -> np.ndarray:
    """(m, 3) class probabilities for node pairs, columns (pos, neg, none)."""
    if state.embeddings is None:
        raise ValueError("state has no embeddings; run forward or training first")
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    return _softmax(_pair_logits(state.embeddings, state.mlg_weights, u, v))


def predict_edge_probs(state: EncoderState, u: int, v: int) -> EdgeProbabilities:
    """Probabilities of a positive edge, negative edge, or no edge for (u, v)."""
    if u == v:
        raise ValueError("u and v must differ")
    p = pair_class_probabilities(state, np.asarray([u]), np.asarray([v]))[0]
    return EdgeProbabilities(p_pos=float(p[0]), p_neg=float(p[1]), p_none=float(p[2]))


# -- checkpoint serialization -------------------------------------------------

# Flat binary layout (little endian):
#   magic "SIGAUG01" | u32 version | u32 layers | u64 nodes | u32 d0 | u32 d
#   | u64 epochs_trained | f64 init_weight_norm | u8 has_embeddings
#   then row-major float64 blocks: W_pos[0], W_neg[0], ..., W_pos[L-1],
#   W_neg[L-1], mlg (4d x 3), input features (n x d0), embeddings (n x 2d,
#   only if flagged).  loss_history is diagnostic and not serialized.
_HEADER = struct.Struct("<8sIIQIIQdB")


def save_checkpoint(state: EncoderState, path: str | Path) -> None:
    n, d0 = state.input_features.shape
    d = state.embed_dim
    has_z = state.embeddings is not None
    with Path(path).open("wb") as fh:
        fh.write(
            _HEADER.pack(
                _CHECKPOINT_MAGIC,
                _CHECKPOINT_VERSION,
                state.num_layers,
                n,
                d0,
                d,
                state.epochs_trained,
                state.init_weight_norm,
                1 if has_z else 0,
            )
        )
        for w_pos, w_neg in zip(state.pos_weights, state.neg_weights):
            fh.write(np.ascontiguousarray(w_pos).tobytes())
            fh.write(np.ascontiguousarray(w_neg).tobytes())
        fh.write(np.ascontiguousarray(state.mlg_weights).tobytes())
        fh.write(np.ascontiguousarray(state.input_features).tobytes())
        if has_z:
            fh.write(np.ascontiguousarray(state.embeddings).tobytes())


def load_checkpoint(path: str | Path) -> EncoderState:
    with Path(path).open("rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise ValueError(f"{path}: truncated checkpoint header")
        magic, version, layers, n, d0, d, epochs_trained, init_norm, has_z = _HEADER.unpack(header)
        if magic != _CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not an encoder checkpoint")
        if version != _CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")

        def block(rows: int, cols: int) -> np.ndarray:
            raw = fh.read(rows * cols * 8)
            if len(raw) != rows * cols * 8:
                raise ValueError(f"{path}: truncated checkpoint data")
            return np.frombuffer(raw, dtype="<f8").reshape(rows, cols).copy()

        pos_weights, neg_weights = [], []
        for layer in range(layers):
            fan_in = 2 * d0 if layer == 0 else 3 * d
            pos_weights.append(block(d, fan_in))
            neg_weights.append(block(d, fan_in))
        theta = block(4 * d, 3)
        h0 = block(n, d0)
        z = block(n, 2 * d) if has_z else None
    return EncoderState(
        pos_weights=pos_weights,
        neg_weights=neg_weights,
        mlg_weights=theta,
        input_features=h0,
        embeddings=z,
        init_weight_norm=init_norm,
        epochs_trained=epochs_trained,
    )


def export_state_json(state: EncoderState, path: str | Path) -> None:
    """Human-inspectable JSON dump of every block (large for big graphs)."""
    payload = {
        "version": _CHECKPOINT_VERSION,
        "layers": state.num_layers,
        "num_nodes": state.num_nodes,
        "embed_dim": state.embed_dim,
        "epochs_trained": state.epochs_trained,
        "init_weight_norm": state.init_weight_norm,
        "weight_norm": state.weight_norm(),
        "pos_weights": [w.tolist() for w in state.pos_weights],
        "neg_weights": [w.tolist() for w in state.neg_weights],
        "mlg_weights": state.mlg_weights.tolist(),
        "input_features": state.input_features.tolist(),
        "embeddings": None if state.embeddings is None else state.embeddings.tolist(),
    }
    Path(path).write_text(json.dumps(payload))
