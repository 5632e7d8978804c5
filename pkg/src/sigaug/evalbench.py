"""Link-sign-prediction evaluation: metrics, multi-seed experiments,
random-perturbation baselines, sensitivity sweeps, and a generalization-gap
diagnostic.

Test-edge signs are predicted by a binary logistic head fit on concatenated
pair embeddings of the training edges.  AUC is the rank statistic with half
credit for ties; F1 comes in binary (positive class), micro, and macro
flavors.  The gap diagnostic evaluates the bound

    2*a_lx + sqrt(2) * a_ly * M * beta * (theta + t * eta * a_lx * a_f * beta) / n_t

with user-supplied Lipschitz-style constants, beta the largest embedding
magnitude and theta the initial weight norm, so only the bound's shape (its
decay in the training-edge count) is meaningful, not its absolute value.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .augment import AugmentConfig, AugmentationLog, augment
from .balance import balance_report
from .curriculum import (
    CurriculumSchedule,
    PacingConfig,
    score_and_sort,
    train_with_curriculum,
)
from .encoder import EncoderConfig, EncoderState, train_encoder
from .graph import (
    NEG,
    POS,
    EdgeSample,
    build_graph,
    density,
    graph_from_samples,
    load_edge_list,
    split_train_test,
)

log = logging.getLogger(__name__)

PERTURBATION_KINDS = ("drop-edge", "add-pos", "del-pos", "add-neg", "del-neg", "flip-sign")
SWEEPABLE_PARAMS = (
    "eps_add_pos",
    "eps_add_neg",
    "eps_del_pos",
    "eps_del_neg",
    "big_t",
    "lambda0",
)


# -- metrics -----------------------------------------------------------------


@dataclass
class MetricsSet:
    """Metrics of one run; ``auc`` is None when only one class is present."""

    auc: float | None
    f1_binary: float
    f1_micro: float
    f1_macro: float


def auc_rank(scores: Sequence[float], labels: Sequence[int]) -> float | None:
    """Rank-statistic AUC with half credit for tied scores."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    pos_mask = labels == POS
    n_pos = int(pos_mask.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores)
    return float((ranks[pos_mask].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def _f1(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def compute_metrics(scores: Sequence[float], labels: Sequence[int]) -> MetricsSet:
    """AUC plus F1 variants; predictions are sign(score - 0.5), ties positive."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if len(scores) == 0 or len(scores) != len(labels):
        raise ValueError("scores and labels must be equal-length and non-empty")
    if not np.isin(labels, (POS, NEG)).all():
        raise ValueError("labels must be +1 or -1")
    preds = np.where(scores >= 0.5, POS, NEG)
    tp = int(((preds == POS) & (labels == POS)).sum())
    fp = int(((preds == POS) & (labels == NEG)).sum())
    fn = int(((preds == NEG) & (labels == POS)).sum())
    tn = int(((preds == NEG) & (labels == NEG)).sum())
    f1_pos = _f1(tp, fp, fn)
    f1_neg = _f1(tn, fn, fp)
    return MetricsSet(
        auc=auc_rank(scores, labels),
        f1_binary=f1_pos,
        f1_micro=_f1(tp + tn, fp + fn, fn + fp),
        f1_macro=(f1_pos + f1_neg) / 2.0,
    )


# -- downstream sign classifier ----------------------------------------------


def fit_logistic(
    features: np.ndarray,
    labels01: np.ndarray,
    lr: float = 0.1,
    steps: int = 300,
) -> tuple[np.ndarray, float]:
    """Unregularized binary logistic fit (full-batch Adam from zero init)."""
    m, dim = features.shape
    w = np.zeros(dim)
    b = 0.0
    mw = np.zeros(dim)
    vw = np.zeros(dim)
    mb = vb = 0.0
    b1, b2, eps = 0.9, 0.999, 1e-8
    for t in range(1, steps + 1):
        p = 1.0 / (1.0 + np.exp(-(features @ w + b)))
        err = (p - labels01) / m
        gw = features.T @ err
        gb = float(err.sum())
        mw = b1 * mw + (1 - b1) * gw
        vw = b2 * vw + (1 - b2) * gw * gw
        mb = b1 * mb + (1 - b1) * gb
        vb = b2 * vb + (1 - b2) * gb * gb
        c1 = 1 - b1**t
        c2 = 1 - b2**t
        w -= lr * (mw / c1) / (np.sqrt(vw / c2) + eps)
        b -= lr * (mb / c1) / (math.sqrt(vb / c2) + eps)
    return w, b


def _pair_features(state: EncoderState, edges: Sequence[EdgeSample]) -> np.ndarray:
    z = state.embeddings
    u = np.asarray([e.pair[0] for e in edges], dtype=np.int64)
    v = np.asarray([e.pair[1] for e in edges], dtype=np.int64)
    return np.hstack([z[u], z[v]])


def predict_test_signs(
    state: EncoderState,
    train: Sequence[EdgeSample],
    test: Sequence[EdgeSample],
) -> tuple[np.ndarray, np.ndarray]:
    """P(positive) per test edge from a logistic head fit on the train edges."""
    if state.embeddings is None:
        raise ValueError("state has no embeddings; train or run forward first")
    train_labels = np.asarray([1.0 if e.sign == POS else 0.0 for e in train])
    if len(train) == 0 or train_labels.min() == train_labels.max():
        raise ValueError("training set must contain both signs")
    w, b = fit_logistic(_pair_features(state, train), train_labels)
    scores = 1.0 / (1.0 + np.exp(-(_pair_features(state, test) @ w + b)))
    labels = np.asarray([e.sign for e in test], dtype=np.int64)
    return scores, labels


# -- random perturbation baselines ---------------------------------------------


def random_perturbation(
    train: Sequence[EdgeSample],
    kind: str,
    ratio: float,
    seed: int,
    num_nodes: int | None = None,
) -> list[EdgeSample]:
    """Uniformly apply one random edit kind to ceil(ratio * |edges|) items.

    drop-edge/flip-sign draw from all edges, del-pos/del-neg only from that
    sign's edges (error when the pool is too small), add-pos/add-neg insert
    uniformly random absent pairs with the given sign.
    """
    if kind not in PERTURBATION_KINDS:
        raise ValueError(f"unknown perturbation kind {kind!r}")
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must be in [0, 1], got {ratio}")
    edges = [e.canonical() for e in train]
    if ratio == 0.0:
        return edges
    if num_nodes is None:
        num_nodes = 1 + max(max(e.u, e.v) for e in edges)
    rng = np.random.Generator(np.random.PCG64(seed))
    count = math.ceil(ratio * len(edges))

    if kind in ("drop-edge", "flip-sign"):
        pool = list(range(len(edges)))
    elif kind == "del-pos":
        pool = [i for i, e in enumerate(edges) if e.sign == POS]
    elif kind == "del-neg":
        pool = [i for i, e in enumerate(edges) if e.sign == NEG]
    else:
        pool = []

    if kind in ("drop-edge", "del-pos", "del-neg"):
        if count > len(pool):
            raise ValueError(
                f"{kind}: cannot remove {count} edges from a pool of {len(pool)}"
            )
        chosen = set(rng.choice(pool, size=count, replace=False).tolist()) if count else set()
        return [e for i, e in enumerate(edges) if i not in chosen]
    if kind == "flip-sign":
        chosen = set(rng.choice(pool, size=count, replace=False).tolist()) if count else set()
        return [
            EdgeSample(e.u, e.v, -e.sign) if i in chosen else e
            for i, e in enumerate(edges)
        ]
    # additions
    sign = POS if kind == "add-pos" else NEG
    occupied = {e.pair for e in edges}
    max_pairs = num_nodes * (num_nodes - 1) // 2
    if count > max_pairs - len(occupied):
        raise ValueError("not enough absent pairs to add")
    added: list[EdgeSample] = []
    while len(added) < count:
        a = int(rng.integers(0, num_nodes))
        b = int(rng.integers(0, num_nodes))
        if a == b:
            continue
        pair = (a, b) if a < b else (b, a)
        if pair in occupied:
            continue
        occupied.add(pair)
        added.append(EdgeSample(pair[0], pair[1], sign))
    return edges + added


# -- generalization-gap diagnostic ----------------------------------------------


@dataclass
class GapConstants:
    """User-supplied constants for the bound expression (defaults 1.0)."""

    alpha_lx: float = 1.0
    alpha_ly: float = 1.0
    alpha_f: float = 1.0
    m_const: float = 1.0
    eta: float = 0.01
    t: float = 300.0

    def __post_init__(self):
        for name in ("alpha_lx", "alpha_ly", "alpha_f", "m_const", "eta", "t"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class GapDiagnostic:
    train_error: float
    test_error: float
    empirical_gap: float
    z_inf_norm: float
    weight_norm: float
    init_weight_norm: float
    n_train_edges: int
    bound_value: float


def bound_value(
    constants: GapConstants, beta: float, theta: float, n_train_edges: int
) -> float:
    """Bound: 2*a_lx + sqrt(2)*a_ly*M*beta*(theta + t*eta*a_lx*a_f*beta)/n_t."""
    if n_train_edges <= 0:
        raise ValueError("n_train_edges must be positive")
    c = constants
    growth = theta + c.t * c.eta * c.alpha_lx * c.alpha_f * beta
    return 2 * c.alpha_lx + math.sqrt(2) * c.alpha_ly * c.m_const * beta * growth / n_train_edges


def _binary_cross_entropy(scores: np.ndarray, labels: np.ndarray) -> float:
    y = (labels == POS).astype(np.float64)
    p = np.clip(scores, 1e-12, 1 - 1e-12)
    return float(-(y * np.log(p) + (1 - y) * np.log(1 - p)).mean())


def generalization_diagnostic(
    state: EncoderState,
    train: Sequence[EdgeSample],
    test: Sequence[EdgeSample],
    constants: GapConstants | None = None,
) -> GapDiagnostic:
    """Empirical train/test gap of the downstream classifier plus the bound.

    Train/test error is the mean binary cross-entropy of the logistic sign
    classifier; beta is max|Z| and theta the recorded initial weight norm.
    """
    constants = constants or GapConstants()
    train_labels = np.asarray([1.0 if e.sign == POS else 0.0 for e in train])
    w, b = fit_logistic(_pair_features(state, train), train_labels)
    train_scores = 1.0 / (1.0 + np.exp(-(_pair_features(state, train) @ w + b)))
    test_scores = 1.0 / (1.0 + np.exp(-(_pair_features(state, test) @ w + b)))
    train_err = _binary_cross_entropy(train_scores, np.asarray([e.sign for e in train]))
    test_err = _binary_cross_entropy(test_scores, np.asarray([e.sign for e in test]))
    beta = float(np.abs(state.embeddings).max())
    return GapDiagnostic(
        train_error=train_err,
        test_error=test_err,
        empirical_gap=abs(train_err - test_err),
        z_inf_norm=beta,
        weight_norm=state.weight_norm(),
        init_weight_norm=state.init_weight_norm,
        n_train_edges=len(train),
        bound_value=bound_value(constants, beta, state.init_weight_norm, len(train)),
    )


# -- experiment orchestration -----------------------------------------------------


@dataclass
class SeedResult:
    seed: int
    metrics: MetricsSet
    n_train: int
    n_test: int
    n_train_final: int
    density_before: float
    density_after: float
    bd_before: float | None
    bd_after: float | None
    runtime_sec: float
    augmentation: AugmentationLog | None = None
    diagnostic: GapDiagnostic | None = None
    final_train: list[EdgeSample] = field(default_factory=list)
    schedule: CurriculumSchedule | None = None
    encoder_state: EncoderState | None = None


@dataclass
class ExperimentReport:
    dataset: str
    pipeline: str
    ratio: float
    seeds: list[int]
    results: list[SeedResult] = field(default_factory=list)

    def metric_values(self, name: str) -> list[float]:
        vals = []
        for r in self.results:
            v = getattr(r.metrics, name)
            if v is not None:
                vals.append(v)
        return vals

    def aggregate(self) -> dict[str, dict[str, float | None]]:
        out: dict[str, dict[str, float | None]] = {}
        for name in ("auc", "f1_binary", "f1_micro", "f1_macro"):
            vals = self.metric_values(name)
            if vals:
                out[name] = {
                    "mean": float(np.mean(vals)),
                    "std": float(np.std(vals)),
                    "n": len(vals),
                }
            else:
                out[name] = {"mean": None, "std": None, "n": 0}
        return out

    def summary_row(self) -> str:
        agg = self.aggregate()

        def cell(name: str) -> str:
            a = agg[name]
            if a["mean"] is None:
                return "N/A"
            return f"{100 * a['mean']:.1f}+-{100 * a['std']:.1f}"

        return (
            f"{self.dataset} {self.pipeline} AUC {cell('auc')} "
            f"F1-binary {cell('f1_binary')} F1-micro {cell('f1_micro')} "
            f"F1-macro {cell('f1_macro')}"
        )


def _derive_seeds(seed: int) -> tuple[int, int, int, int]:
    """Independent child seeds for split / pre-train / final model / perturb."""
    children = np.random.SeedSequence(entropy=seed).spawn(4)
    return tuple(int(c.generate_state(1)[0]) for c in children)  # type: ignore[return-value]


def _parse_pipeline(pipeline: str) -> tuple[str, str | None, float]:
    if pipeline.startswith("random:"):
        spec = pipeline[len("random:") :]
        try:
            kind, ratio_s = spec.split(",")
            ratio = float(ratio_s)
        except ValueError:
            raise ValueError(
                f"random pipeline must look like random:<kind>,<ratio>, got {pipeline!r}"
            ) from None
        if kind not in PERTURBATION_KINDS:
            raise ValueError(f"unknown perturbation kind {kind!r}")
        return "random", kind, ratio
    if pipeline not in ("baseline", "sga", "sa-only", "tp-only"):
        raise ValueError(f"unknown pipeline {pipeline!r}")
    return pipeline, None, 0.0


def _load_edges(dataset, dataset_format: str) -> tuple[list[EdgeSample], int, str]:
    if isinstance(dataset, (str, Path)):
        loaded = load_edge_list(dataset, format=dataset_format)
        graph, _ = build_graph(loaded.samples, num_nodes=loaded.num_nodes)
        return graph.to_samples(), graph.num_nodes, str(dataset)
    edges = [e.canonical() for e in dataset]
    num_nodes = 1 + max(max(e.u, e.v) for e in edges)
    graph = graph_from_samples(edges, num_nodes)
    return graph.to_samples(), num_nodes, "<in-memory>"


def run_experiment(
    dataset,
    pipeline: str,
    seeds: Sequence[int],
    enc_cfg: EncoderConfig | None = None,
    aug_cfg: AugmentConfig | None = None,
    pace_cfg: PacingConfig | None = None,
    ratio: float = 0.8,
    dataset_format: str = "rating-csv",
    diagnostic: bool = False,
    gap_constants: GapConstants | None = None,
    encoder_cache: dict | None = None,
    keep_states: bool = False,
) -> ExperimentReport:
    """Split / augment / train / evaluate over every seed and aggregate.

    Pipelines: ``baseline`` (plain training), ``sga`` (structure augmentation
    plus curriculum), ``sa-only``, ``tp-only``, and ``random:<kind>,<ratio>``.
    Plain training is realized as the lambda0 = 1 degenerate curriculum so a
    no-op-threshold ``sga`` run is bit-identical to ``baseline``.  When
    ``encoder_cache`` is given, pre-trained candidate scorers are reused per
    seed (valid while dataset, split, and encoder config are unchanged).
    """
    enc_cfg = enc_cfg or EncoderConfig()
    aug_cfg = aug_cfg or AugmentConfig()
    pace_cfg = pace_cfg or PacingConfig(
        big_t=max(1, enc_cfg.epochs // 2), total_epochs=enc_cfg.epochs
    )
    if pace_cfg.total_epochs != enc_cfg.epochs:
        pace_cfg = replace(pace_cfg, total_epochs=enc_cfg.epochs)
    kind, perturb_kind, perturb_ratio = _parse_pipeline(pipeline)
    edges, num_nodes, dataset_name = _load_edges(dataset, dataset_format)

    report = ExperimentReport(
        dataset=dataset_name, pipeline=pipeline, ratio=ratio, seeds=list(seeds)
    )
    plain_pace = PacingConfig(lambda0=1.0, big_t=1, total_epochs=enc_cfg.epochs)
    for seed in seeds:
        started = time.perf_counter()
        stage = "split"
        try:
            split_seed, pretrain_seed, final_seed, perturb_seed = _derive_seeds(seed)
            split = split_train_test(edges, ratio, split_seed)
            train = split.train
            train_graph = graph_from_samples(train, num_nodes)
            before_report = balance_report(train_graph)
            aug_log: AugmentationLog | None = None

            if kind in ("sga", "sa-only"):
                stage = "augment"
                pre_cfg = replace(enc_cfg, seed=pretrain_seed)
                scorer = encoder_cache.get(seed) if encoder_cache is not None else None
                if scorer is None:
                    scorer = train_encoder(train_graph, train, pre_cfg)
                    if encoder_cache is not None:
                        encoder_cache[seed] = scorer
                final_train, aug_log = augment(
                    train_graph, train, pre_cfg, aug_cfg, pretrained=scorer
                )
            elif kind == "random":
                stage = "perturb"
                final_train = random_perturbation(
                    train, perturb_kind, perturb_ratio, perturb_seed, num_nodes=num_nodes
                )
            else:
                final_train = train

            stage = "schedule"
            final_graph = graph_from_samples(final_train, num_nodes)
            schedule = score_and_sort(final_graph, final_train)
            pace = pace_cfg if kind in ("sga", "tp-only") else plain_pace

            stage = "train"
            model_cfg = replace(enc_cfg, seed=final_seed)
            state = train_with_curriculum(final_graph, schedule, model_cfg, pace)

            stage = "evaluate"
            scores, labels = predict_test_signs(state, final_train, split.test)
            metrics = compute_metrics(scores, labels)
            after_report = balance_report(final_graph)
            diag = None
            if diagnostic:
                constants = gap_constants or GapConstants(
                    eta=enc_cfg.learning_rate, t=enc_cfg.epochs
                )
                diag = generalization_diagnostic(state, final_train, split.test, constants)
        except Exception as exc:
            raise RuntimeError(f"seed {seed}: stage {stage!r} failed: {exc}") from exc
        result = SeedResult(
            seed=seed,
            metrics=metrics,
            n_train=len(train),
            n_test=len(split.test),
            n_train_final=len(final_train),
            density_before=density(train_graph),
            density_after=density(final_graph),
            bd_before=before_report.balance_degree,
            bd_after=after_report.balance_degree,
            runtime_sec=time.perf_counter() - started,
            augmentation=aug_log,
            diagnostic=diag,
            final_train=list(final_train),
            schedule=schedule,
            encoder_state=state if keep_states else None,
        )
        report.results.append(result)
        log.info(
            "seed %d done: auc=%s f1b=%.4f (%.1fs)",
            seed,
            "N/A" if metrics.auc is None else f"{metrics.auc:.4f}",
            metrics.f1_binary,
            result.runtime_sec,
        )
    return report


def report_payload(report: ExperimentReport) -> dict:
    """JSON-ready report content, excluding volatile timing information."""
    per_seed = []
    for r in report.results:
        per_seed.append(
            {
                "seed": r.seed,
                "metrics": asdict(r.metrics),
                "n_train": r.n_train,
                "n_test": r.n_test,
                "n_train_final": r.n_train_final,
                "density_before": r.density_before,
                "density_after": r.density_after,
                "bd_before": r.bd_before,
                "bd_after": r.bd_after,
                "augmentation": asdict(r.augmentation) if r.augmentation else None,
                "diagnostic": asdict(r.diagnostic) if r.diagnostic else None,
            }
        )
    return {
        "dataset": report.dataset,
        "pipeline": report.pipeline,
        "ratio": report.ratio,
        "seeds": report.seeds,
        "aggregate": report.aggregate(),
        "per_seed": per_seed,
    }


def report_timing(report: ExperimentReport) -> dict:
    per_seed = [round(r.runtime_sec, 3) for r in report.results]
    return {"per_seed_sec": per_seed, "total_sec": round(sum(per_seed), 3)}


def sensitivity_sweep(
    dataset,
    param: str,
    values: Sequence[float],
    pipeline: str = "sga",
    seeds: Sequence[int] = (0, 1, 2, 3, 4),
    enc_cfg: EncoderConfig | None = None,
    aug_cfg: AugmentConfig | None = None,
    pace_cfg: PacingConfig | None = None,
    ratio: float = 0.8,
    dataset_format: str = "rating-csv",
) -> list[dict]:
    """One run_experiment per value of one augmentation/pacing parameter.

    The pre-trained candidate scorer is cached per seed and shared across
    values (none of the sweepable parameters affect it).
    """
    if param not in SWEEPABLE_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}; choose from {SWEEPABLE_PARAMS}")
    if not values:
        raise ValueError("sweep needs at least one value")
    enc_cfg = enc_cfg or EncoderConfig()
    aug_cfg = aug_cfg or AugmentConfig()
    pace_cfg = pace_cfg or PacingConfig(
        big_t=max(1, enc_cfg.epochs // 2), total_epochs=enc_cfg.epochs
    )
    cache: dict = {}
    rows: list[dict] = []
    for value in values:
        aug = aug_cfg
        pace = pace_cfg
        if param.startswith("eps_"):
            aug = replace(aug_cfg, **{param: float(value)})
        elif param == "lambda0":
            pace = replace(pace_cfg, lambda0=float(value))
        else:
            pace = replace(pace_cfg, big_t=int(value))
        rep = run_experiment(
            dataset,
            pipeline,
            seeds,
            enc_cfg=enc_cfg,
            aug_cfg=aug,
            pace_cfg=pace,
            ratio=ratio,
            dataset_format=dataset_format,
            encoder_cache=cache,
        )
        agg = rep.aggregate()
        row = {"param": param, "value": value}
        for name in ("auc", "f1_binary", "f1_micro", "f1_macro"):
            row[f"{name}_mean"] = agg[name]["mean"]
            row[f"{name}_std"] = agg[name]["std"]
        row["pretrain_curves"] = [
            list(r.augmentation.pretrain_loss) if r.augmentation else []
            for r in rep.results
        ]
        rows.append(row)
    return rows
