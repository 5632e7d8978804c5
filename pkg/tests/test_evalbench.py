import itertools
import math

import numpy as np
import pytest

from conftest import community_records
from sigaug.augment import AugmentConfig
from sigaug.curriculum import PacingConfig
from sigaug.encoder import EncoderConfig, EncoderState
from sigaug.evalbench import (
    GapConstants,
    auc_rank,
    bound_value,
    compute_metrics,
    fit_logistic,
    generalization_diagnostic,
    predict_test_signs,
    random_perturbation,
    run_experiment,
    sensitivity_sweep,
)
from sigaug.graph import EdgeSample


# -- AUC -----------------------------------------------------------------------


def pairwise_auc_oracle(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == -1]
    if not pos or not neg:
        return None
    wins = 0.0
    for p, n in itertools.product(pos, neg):
        if p > n:
            wins += 1.0
        elif p == n:
            wins += 0.5
    return wins / (len(pos) * len(neg))


def test_auc_perfect_ranking():
    assert auc_rank([0.9, 0.8, 0.2, 0.1], [1, 1, -1, -1]) == 1.0


def test_auc_all_ties():
    assert auc_rank([0.5] * 6, [1, 1, 1, -1, -1, -1]) == 0.5


def test_auc_hand_value():
    assert auc_rank([0.9, 0.8, 0.4, 0.3], [1, -1, 1, -1]) == pytest.approx(0.75)


def test_auc_single_class_is_undefined():
    assert auc_rank([0.1, 0.9], [1, 1]) is None


def test_auc_matches_pairwise_oracle():
    rng = np.random.default_rng(17)
    for _ in range(100):
        m = int(rng.integers(2, 60))
        # discretized scores force plenty of ties
        scores = rng.integers(0, 7, size=m) / 6.0
        labels = np.where(rng.random(m) < 0.5, 1, -1)
        if len(set(labels.tolist())) < 2:
            labels[0] = -labels[0]
        expected = pairwise_auc_oracle(scores.tolist(), labels.tolist())
        assert auc_rank(scores, labels) == pytest.approx(expected, abs=1e-12)


# -- F1 ------------------------------------------------------------------------


def test_f1_micro_equals_accuracy():
    rng = np.random.default_rng(3)
    scores = rng.random(200)
    labels = np.where(rng.random(200) < 0.6, 1, -1)
    metrics = compute_metrics(scores, labels)
    preds = np.where(scores >= 0.5, 1, -1)
    assert metrics.f1_micro == pytest.approx(float((preds == labels).mean()))


def test_f1_against_sklearn():
    sklearn_metrics = pytest.importorskip("sklearn.metrics")
    rng = np.random.default_rng(5)
    scores = rng.random(300)
    labels = np.where(rng.random(300) < 0.7, 1, -1)
    metrics = compute_metrics(scores, labels)
    preds = np.where(scores >= 0.5, 1, -1)
    assert metrics.f1_binary == pytest.approx(
        sklearn_metrics.f1_score(labels, preds, pos_label=1)
    )
    assert metrics.f1_micro == pytest.approx(
        sklearn_metrics.f1_score(labels, preds, average="micro")
    )
    assert metrics.f1_macro == pytest.approx(
        sklearn_metrics.f1_score(labels, preds, average="macro")
    )


def test_compute_metrics_single_class_f1_still_defined():
    metrics = compute_metrics([0.9, 0.2], [1, 1])
    assert metrics.auc is None
    assert 0.0 <= metrics.f1_binary <= 1.0


def test_compute_metrics_validation():
    with pytest.raises(ValueError):
        compute_metrics([], [])
    with pytest.raises(ValueError):
        compute_metrics([0.5], [2])


# -- downstream classifier -------------------------------------------------------


def test_logistic_matches_grid_search_oracle():
    feats = np.asarray(
        [
            [0.0, 0.0],
            [0.0, 0.0],
            [1.0, 1.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [2.0, 1.0],
            [1.0, 2.0],
            [0.5, 0.5],
        ]
    )
    labels = np.asarray([1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0])

    def bce(w1, w2, b):
        z = feats[:, 0] * w1 + feats[:, 1] * w2 + b
        p = 1.0 / (1.0 + np.exp(-z))
        p = np.clip(p, 1e-12, 1 - 1e-12)
        return float(-(labels * np.log(p) + (1 - labels) * np.log(1 - p)).mean())

    # gradient-free fit: iteratively refined grid over (w1, w2, b)
    center, width = (0.0, 0.0, 0.0), 8.0
    for _ in range(8):
        best = None
        grid = np.linspace(-width, width, 9)
        for dw1 in grid:
            for dw2 in grid:
                for db in grid:
                    cand = (center[0] + dw1, center[1] + dw2, center[2] + db)
                    val = bce(*cand)
                    if best is None or val < best[0]:
                        best = (val, cand)
        center = best[1]
        width /= 3.0
    w_oracle = np.asarray(center[:2])
    b_oracle = center[2]

    w_fit, b_fit = fit_logistic(feats, labels)
    p_oracle = 1.0 / (1.0 + np.exp(-(feats @ w_oracle + b_oracle)))
    p_fit = 1.0 / (1.0 + np.exp(-(feats @ w_fit + b_fit)))
    assert np.abs(p_fit - p_oracle).max() <= 0.05


def separable_state():
    z = np.zeros((6, 2))
    z[:3, 0] = 1.0  # community A
    z[3:, 1] = 1.0  # community B
    return EncoderState(
        pos_weights=[np.zeros((1, 2))],
        neg_weights=[np.zeros((1, 2))],
        mlg_weights=np.zeros((4, 3)),
        input_features=np.zeros((6, 1)),
        embeddings=z,
        epochs_trained=1,
    )


def test_predict_test_signs_separable_all_correct():
    state = separable_state()
    train = [
        EdgeSample(0, 1, 1),
        EdgeSample(1, 2, 1),
        EdgeSample(3, 4, 1),
        EdgeSample(4, 5, 1),
        EdgeSample(0, 3, -1),
        EdgeSample(1, 4, -1),
        EdgeSample(2, 5, -1),
    ]
    test = [EdgeSample(0, 2, 1), EdgeSample(3, 5, 1), EdgeSample(2, 4, -1), EdgeSample(0, 5, -1)]
    scores, labels = predict_test_signs(state, train, test)
    preds = np.where(scores >= 0.5, 1, -1)
    assert (preds == labels).all()
    # deterministic: zero-init optimizer, no randomness
    scores2, _ = predict_test_signs(state, train, test)
    assert np.array_equal(scores, scores2)


def test_predict_test_signs_single_class_errors():
    state = separable_state()
    train = [EdgeSample(0, 1, 1), EdgeSample(1, 2, 1)]
    with pytest.raises(ValueError):
        predict_test_signs(state, train, [EdgeSample(0, 2, 1)])


# -- random perturbations ----------------------------------------------------------


def edges_mixed(n_pos=70, n_neg=30):
    edges = []
    idx = 0
    for _ in range(n_pos):
        edges.append(EdgeSample(idx, idx + 1, 1))
        idx += 2
    for _ in range(n_neg):
        edges.append(EdgeSample(idx, idx + 1, -1))
        idx += 2
    return edges


def test_perturbation_ratio_zero_is_identity():
    edges = edges_mixed()
    assert random_perturbation(edges, "drop-edge", 0.0, seed=1) == edges


def test_perturbation_drop_count():
    edges = edges_mixed(70, 30)
    out = random_perturbation(edges, "drop-edge", 0.1, seed=2)
    assert len(out) == 90
    assert set(out) <= set(edges)


def test_perturbation_flip_all_swaps_counts():
    edges = edges_mixed(70, 30)
    out = random_perturbation(edges, "flip-sign", 1.0, seed=3)
    assert sum(1 for e in out if e.sign == 1) == 30
    assert sum(1 for e in out if e.sign == -1) == 70


def test_perturbation_del_pos_pool_too_small():
    edges = edges_mixed(20, 80)
    with pytest.raises(ValueError):
        random_perturbation(edges, "del-pos", 0.5, seed=0)  # needs 50, pool has 20


def test_perturbation_add_inserts_absent_pairs():
    edges = edges_mixed(10, 5)
    out = random_perturbation(edges, "add-neg", 0.2, seed=4, num_nodes=40)
    added = [e for e in out if e not in edges]
    assert len(added) == 3  # ceil(0.2 * 15)
    assert all(e.sign == -1 for e in added)
    existing = {e.pair for e in edges}
    assert all(e.pair not in existing for e in added)


def test_perturbation_deterministic():
    edges = edges_mixed()
    a = random_perturbation(edges, "drop-edge", 0.3, seed=9)
    b = random_perturbation(edges, "drop-edge", 0.3, seed=9)
    assert a == b


def test_perturbation_validation():
    edges = edges_mixed()
    with pytest.raises(ValueError):
        random_perturbation(edges, "nuke", 0.1, seed=0)
    with pytest.raises(ValueError):
        random_perturbation(edges, "drop-edge", 1.5, seed=0)


# -- generalization bound ------------------------------------------------------------


def test_bound_hand_value():
    constants = GapConstants(alpha_lx=1, alpha_ly=1, alpha_f=1, m_const=1, eta=0.01, t=1)
    value = bound_value(constants, beta=1.0, theta=1.0, n_train_edges=100)
    assert value == pytest.approx(2 + math.sqrt(2) * 1.01 / 100, rel=1e-12)
    assert value == pytest.approx(2.01428, abs=5e-6)


def test_bound_strictly_decreasing_and_limit():
    constants = GapConstants(alpha_lx=1, alpha_ly=1, alpha_f=1, m_const=1, eta=1.0, t=1.0)
    values = [bound_value(constants, 1.0, 1.0, n) for n in (100, 1_000, 10_000, 1_000_000)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert bound_value(constants, 1.0, 1.0, 10**9) - 2.0 * constants.alpha_lx < 1e-6
    assert bound_value(constants, 1.0, 1.0, 200) < bound_value(constants, 1.0, 1.0, 100)


def test_bound_validation():
    with pytest.raises(ValueError):
        GapConstants(alpha_lx=0)
    with pytest.raises(ValueError):
        bound_value(GapConstants(), 1.0, 1.0, 0)


def test_gap_diagnostic_zero_when_train_equals_test():
    state = separable_state()
    edges = [
        EdgeSample(0, 1, 1),
        EdgeSample(3, 4, 1),
        EdgeSample(0, 3, -1),
        EdgeSample(1, 4, -1),
    ]
    diag = generalization_diagnostic(state, edges, edges)
    assert diag.empirical_gap == 0.0
    assert diag.z_inf_norm == 1.0
    assert diag.n_train_edges == 4
    assert diag.bound_value > 0


# -- experiment orchestration ----------------------------------------------------------


@pytest.fixture(scope="module")
def tiny_setup():
    edges = community_records(n=26, seed=8, p_intra=0.35, p_inter=0.2, flip=0.08)
    enc = EncoderConfig(embed_dim=8, epochs=30, seed=0)
    return edges, enc


def test_noop_sga_is_metric_identical_to_baseline(tiny_setup):
    edges, enc = tiny_setup
    noop = AugmentConfig(eps_add_pos=1.0, eps_add_neg=1.0, eps_del_pos=0.0, eps_del_neg=0.0)
    pace1 = PacingConfig(lambda0=1.0, big_t=1, total_epochs=30)
    base = run_experiment(edges, "baseline", [0, 1], enc_cfg=enc)
    noop_sga = run_experiment(edges, "sga", [0, 1], enc_cfg=enc, aug_cfg=noop, pace_cfg=pace1)
    for b, s in zip(base.results, noop_sga.results):
        assert b.metrics == s.metrics


def test_random_ratio_zero_equals_baseline(tiny_setup):
    edges, enc = tiny_setup
    base = run_experiment(edges, "baseline", [0], enc_cfg=enc)
    rnd = run_experiment(edges, "random:drop-edge,0.0", [0], enc_cfg=enc)
    assert base.results[0].metrics == rnd.results[0].metrics


def test_run_experiment_records_densities_and_balance(tiny_setup):
    edges, enc = tiny_setup
    rep = run_experiment(edges, "sa-only", [0], enc_cfg=enc,
                         aug_cfg=AugmentConfig(eps_del_pos=0.15, eps_del_neg=0.15))
    r = rep.results[0]
    assert r.augmentation is not None
    assert r.n_train_final == len(r.final_train)
    assert r.density_before > 0 and r.density_after > 0
    assert rep.aggregate()["auc"]["n"] == 1


def test_run_experiment_unknown_pipeline(tiny_setup):
    edges, enc = tiny_setup
    with pytest.raises(ValueError):
        run_experiment(edges, "magic", [0], enc_cfg=enc)
    with pytest.raises(ValueError):
        run_experiment(edges, "random:drop-edge", [0], enc_cfg=enc)


def test_sweep_single_value_matches_run(tiny_setup):
    edges, enc = tiny_setup
    pace = PacingConfig(lambda0=0.25, big_t=15, total_epochs=30)
    rows = sensitivity_sweep(edges, "lambda0", [0.25], pipeline="tp-only",
                             seeds=[0, 1], enc_cfg=enc, pace_cfg=pace)
    rep = run_experiment(edges, "tp-only", [0, 1], enc_cfg=enc, pace_cfg=pace)
    agg = rep.aggregate()
    assert len(rows) == 1
    assert rows[0]["auc_mean"] == agg["auc"]["mean"]
    assert rows[0]["f1_binary_mean"] == agg["f1_binary"]["mean"]


def test_sweep_reuses_pretrained_encoder(tiny_setup):
    edges, enc = tiny_setup
    rows = sensitivity_sweep(
        edges,
        "eps_add_pos",
        [0.8, 0.9, 0.95],
        pipeline="sga",
        seeds=[0],
        enc_cfg=enc,
    )
    assert len(rows) == 3
    curves = [row["pretrain_curves"][0] for row in rows]
    assert curves[0] == curves[1] == curves[2]
    assert len(curves[0]) == enc.epochs


def test_sweep_validation(tiny_setup):
    edges, enc = tiny_setup
    with pytest.raises(ValueError):
        sensitivity_sweep(edges, "embed_dim", [8], enc_cfg=enc)
    with pytest.raises(ValueError):
        sensitivity_sweep(edges, "lambda0", [], enc_cfg=enc)
