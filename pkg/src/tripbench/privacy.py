"""Membership-inference and k-NN distance-ratio privacy evaluation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from sklearn.model_selection import train_test_split

from .data_model import EncodingSchema, TripDataset, encode, partition_by_group
from .learners import (
    ForestParams,
    build_knn_index,
    fit_random_forest,
    knn_distances,
    rf_predict_proba,
    roc_auc,
)

DEFAULT_KNN_K = 5
# advisory risk annotations only; never part of any score
DEFAULT_THETA_LOW = 0.5
DEFAULT_THETA_HIGH = 0.9


class DegenerateReferenceError(ValueError):
    """All real reference rows are duplicates; the distance ratio is undefined."""


@dataclass(frozen=True)
class AttackConfig:
    test_fraction: float = 0.3  # stratified attack-model split
    forest: ForestParams = ForestParams()
    seed: int = 0


@dataclass(frozen=True)
class MiaResult:
    """Attack AUC plus labeled membership-score samples for all three sources.

    `score_samples` covers the full train/holdout/synthetic datasets and is
    meant for score-distribution plots. `eval_samples` holds only the rows
    the attack model never fit (its held-out test split); those are the fair
    baseline when comparing synthetic confidence against real-data
    confidence, because in-fit rows carry memorized labels.
    """

    attack_auc: float
    mean_synthetic_confidence: float
    score_samples: Mapping[str, np.ndarray]  # keys: train, holdout, synthetic
    eval_samples: Mapping[str, np.ndarray]  # keys: train, holdout
    mean_holdout_confidence: float  # mean over eval_samples["holdout"]

    def to_dict(self) -> dict:
        return {
            "attack_auc": self.attack_auc,
            "mean_synthetic_confidence": self.mean_synthetic_confidence,
            "mean_holdout_confidence": self.mean_holdout_confidence,
            "sample_counts": {k: int(len(v)) for k, v in self.score_samples.items()},
            "mean_confidence": {k: float(np.mean(v)) for k, v in self.score_samples.items()},
        }


@dataclass(frozen=True)
class KnnPrivacyResult:
    population_ratio: float
    group_ratios: Mapping[str, float]
    group_mean: float
    skipped_groups: tuple[str, ...]
    k: int

    def to_dict(self, theta_low: float = DEFAULT_THETA_LOW,
                theta_high: float = DEFAULT_THETA_HIGH) -> dict:
        return {
            "population_ratio": self.population_ratio,
            "group_ratios": dict(sorted(self.group_ratios.items())),
            "group_mean": self.group_mean,
            "skipped_groups": sorted(self.skipped_groups),
            "k": self.k,
            "risk_annotation": _risk_annotation(self.population_ratio, theta_low, theta_high),
        }


def _risk_annotation(ratio: float, theta_low: float, theta_high: float) -> str:
    if ratio < theta_low:
        return "high risk"
    if ratio > theta_high:
        return "low risk"
    return "intermediate"


def prepare_mia_data(train: TripDataset, holdout: TripDataset,
                     features, schema: EncodingSchema):
    """Stack encoded train (label 1) and holdout (label 0) rows."""
    train.require_nonempty()
    holdout.require_nonempty()
    X_train = encode(train, schema).rows
    X_holdout = encode(holdout, schema).rows
    if X_train.shape[1] != X_holdout.shape[1]:
        raise ValueError("train and holdout encode to different column sets")
    X = np.vstack([X_train, X_holdout])
    y = np.concatenate([np.ones(len(X_train), dtype=int),
                        np.zeros(len(X_holdout), dtype=int)])
    provenance = ["train"] * len(X_train) + ["holdout"] * len(X_holdout)
    return X, y, provenance


def run_mia(train: TripDataset, holdout: TripDataset, syn: TripDataset,
            features, schema: EncodingSchema,
            attack_cfg: AttackConfig = AttackConfig()) -> MiaResult:
    """Train a member-vs-nonmember forest and score the synthetic records.

    Synthetic records are presumed non-members; a high mean membership
    confidence therefore signals memorization by the generator.
    """
    syn.require_nonempty()
    X, y, _ = prepare_mia_data(train, holdout, features, schema)
    idx = np.arange(len(X))
    idx_fit, idx_test, y_fit, y_test = train_test_split(
        idx, y, test_size=attack_cfg.test_fraction, stratify=y,
        random_state=attack_cfg.seed)
    if len(np.unique(y_fit)) < 2 or len(np.unique(y_test)) < 2:
        raise ValueError("degenerate single-class attack split")
    forest = fit_random_forest(X[idx_fit], y_fit, attack_cfg.forest, seed=attack_cfg.seed)
    test_scores = rf_predict_proba(forest, X[idx_test])
    auc = roc_auc(y_test, test_scores)

    samples = {
        "train": rf_predict_proba(forest, encode(train, schema).rows),
        "holdout": rf_predict_proba(forest, encode(holdout, schema).rows),
        "synthetic": rf_predict_proba(forest, encode(syn, schema).rows),
    }
    eval_samples = {
        "train": test_scores[y_test == 1],
        "holdout": test_scores[y_test == 0],
    }
    return MiaResult(attack_auc=float(auc),
                     mean_synthetic_confidence=float(samples["synthetic"].mean()),
                     score_samples=samples,
                     eval_samples=eval_samples,
                     mean_holdout_confidence=float(eval_samples["holdout"].mean()))


def export_mia_distributions(res: MiaResult, bins: int = 40) -> dict:
    """Histogram table of membership scores per source, ready for external plotting."""
    edges = np.linspace(0.0, 1.0, bins + 1)
    out = {"bin_edges": edges.tolist(), "sources": {}}
    for source, scores in res.score_samples.items():
        counts, _ = np.histogram(scores, bins=edges)
        mass = counts / counts.sum() if counts.sum() else counts.astype(float)
        out["sources"][source] = {
            "mass": mass.tolist(),
            "counts": counts.tolist(),
            "n_samples": int(len(scores)),
            "samples": np.asarray(scores).tolist(),
        }
    return out


def distance_ratio(X_real: np.ndarray, X_syn: np.ndarray, k: int = DEFAULT_KNN_K) -> float:
    """Distance ratio on encoded matrices: mean nearest-real distance of the
    synthetic rows over the mean nearest-other-real distance of the real rows.

    The real-to-real baseline queries k+1 neighbors and drops the
    self-distance; the synthetic side keeps exact matches, so a verbatim
    copy scores exactly zero (maximal memorization) while resample-like
    data scores near one. k also bounds the smallest evaluable group.
    """
    if len(X_real) <= k:
        raise ValueError(f"need more than k={k} real records, got {len(X_real)}")
    index = build_knn_index(X_real)
    numerator = float(knn_distances(index, X_syn, k)[:, 0].mean())
    d_real = knn_distances(index, X_real, k + 1)[:, 1]  # drop self-distance
    denominator = float(d_real.mean())
    if denominator <= 0.0:
        raise DegenerateReferenceError(
            "all real rows are duplicated; real-to-real reference distance is zero")
    return numerator / denominator


def knn_privacy_population(real: TripDataset, syn: TripDataset,
                           features, schema: EncodingSchema,
                           k: int = DEFAULT_KNN_K) -> float:
    """Distance ratio between encoded synthetic and real trip datasets."""
    real.require_nonempty()
    syn.require_nonempty()
    return distance_ratio(encode(real, schema).rows, encode(syn, schema).rows, k=k)


def knn_privacy_group(real: TripDataset, syn: TripDataset,
                      features, schema: EncodingSchema,
                      group_feature: str = "day_of_week",
                      k: int = DEFAULT_KNN_K,
                      weighted_mean: bool = False) -> KnnPrivacyResult:
    """Per-group distance ratios; groups with too little data are skipped."""
    real_groups = partition_by_group(real, group_feature)
    syn_groups = partition_by_group(syn, group_feature)

    ratios: dict[str, float] = {}
    weights: dict[str, int] = {}
    skipped: list[str] = []
    for value in sorted(set(real_groups) | set(syn_groups)):
        rg = real_groups.get(value)
        sg = syn_groups.get(value)
        if rg is None or sg is None or len(rg) <= k or len(sg) == 0:
            skipped.append(value)
            continue
        ratios[value] = knn_privacy_population(rg, sg, features, schema, k=k)
        weights[value] = len(rg)
    if not ratios:
        raise ValueError("no evaluable groups: every group was skipped")

    keys = sorted(ratios)
    if weighted_mean:
        w = np.array([weights[v] for v in keys], dtype=float)
        group_mean = float(np.average([ratios[v] for v in keys], weights=w))
    else:
        group_mean = float(np.mean([ratios[v] for v in keys]))
    pop = knn_privacy_population(real, syn, features, schema, k=k)
    return KnnPrivacyResult(population_ratio=pop, group_ratios=ratios,
                            group_mean=group_mean, skipped_groups=tuple(skipped), k=k)
