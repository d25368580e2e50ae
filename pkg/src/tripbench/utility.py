"""Task-specific utility: clustering-centroid agreement and TSTR vs TRTR gaps."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data_model import EncodingSchema, TripDataset, encode
from .learners import fit_gradient_boosting, gb_predict, kmeans_fit, pca_2d

DEFAULT_K_CLUSTERS = 8
DEFAULT_FOLDS = 5

# trip duration predicted from everything except the end time
PREDICTOR_FEATURES = ("origin", "destination", "start_min", "day_of_week")


@dataclass(frozen=True)
class ClusteringUtilityResult:
    centroid_distance: float
    real_centroids: np.ndarray
    syn_centroids: np.ndarray
    pca_projection: np.ndarray  # stacked real+syn centroid coordinates, 2-D
    pca_explained_variance: tuple[float, float]

    def to_dict(self) -> dict:
        k = len(self.real_centroids)
        return {
            "centroid_distance": self.centroid_distance,
            "k_clusters": k,
            "pca_real_centroids": self.pca_projection[:k].tolist(),
            "pca_syn_centroids": self.pca_projection[k:].tolist(),
            "pca_explained_variance": list(self.pca_explained_variance),
        }


@dataclass(frozen=True)
class PredictiveUtilityResult:
    tstr_mae: float
    tstr_rmse: float
    trtr_mae: float
    trtr_rmse: float
    d_mae: float
    d_rmse: float
    folds: int

    def to_dict(self) -> dict:
        return {
            "tstr_mae": self.tstr_mae, "tstr_rmse": self.tstr_rmse,
            "trtr_mae": self.trtr_mae, "trtr_rmse": self.trtr_rmse,
            "d_mae": self.d_mae, "d_rmse": self.d_rmse,
            "folds": self.folds,
        }


def _chamfer_mean(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric mean minimum distance between two centroid sets."""
    d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    return 0.5 * (d.min(axis=1).mean() + d.min(axis=0).mean())


def clustering_utility(real_test: TripDataset, syn: TripDataset,
                       features, schema: EncodingSchema,
                       k_clusters: int = DEFAULT_K_CLUSTERS,
                       seed: int = 0) -> ClusteringUtilityResult:
    """Fit K-Means independently to real and synthetic data, compare centroids."""
    X_real = encode(real_test, schema).rows
    X_syn = encode(syn, schema).rows
    real_model = kmeans_fit(X_real, k_clusters, seed=seed)
    syn_model = kmeans_fit(X_syn, k_clusters, seed=seed)
    stacked = np.vstack([real_model.centroids, syn_model.centroids])
    try:
        projection, explained = pca_2d(stacked)
    except ValueError:
        projection = np.zeros((len(stacked), 2))
        explained = (0.0, 0.0)
    return ClusteringUtilityResult(
        centroid_distance=float(_chamfer_mean(real_model.centroids, syn_model.centroids)),
        real_centroids=real_model.centroids,
        syn_centroids=syn_model.centroids,
        pca_projection=projection,
        pca_explained_variance=explained,
    )


def _duration_target(ds: TripDataset, schema: EncodingSchema):
    X = encode(ds, schema).rows
    y = np.array([r.end_min - r.start_min for r in ds.records], dtype=float)
    return X, y


def _predictor_schema(schema: EncodingSchema) -> EncodingSchema:
    return EncodingSchema(
        categorical_maps={f: v for f, v in schema.categorical_maps.items()
                          if f in PREDICTOR_FEATURES},
        continuous_ranges={f: v for f, v in schema.continuous_ranges.items()
                           if f in PREDICTOR_FEATURES},
    )


def tstr_trtr(real_train: TripDataset, real_test: TripDataset, syn: TripDataset,
              features, schema: EncodingSchema,
              folds: int = DEFAULT_FOLDS, seed: int = 0,
              n_stages: int = 100, learning_rate: float = 0.1,
              max_depth: int = 3) -> PredictiveUtilityResult:
    """Gradient-boosting duration prediction, trained on synthetic vs real data.

    The real test set is split into folds; both protocol arms are evaluated
    on identical folds. The TSTR training sample is size-matched to the
    TRTR one so the gap is not confounded by sample size. Test rows are
    never used for training.
    """
    if folds < 2:
        raise ValueError("need at least 2 folds")
    pschema = _predictor_schema(schema)
    X_train, y_train = _duration_target(real_train, pschema)
    X_syn, y_syn = _duration_target(syn, pschema)
    X_test, y_test = _duration_target(real_test, pschema)

    if np.ptp(y_train) == 0 or np.ptp(y_syn) == 0:
        warnings.warn("constant prediction target in training data", stacklevel=2)

    rng = np.random.default_rng(seed)
    fold_ids = np.arange(len(X_test)) % folds
    fold_ids = fold_ids[rng.permutation(len(X_test))]

    trtr_model = fit_gradient_boosting(X_train, y_train, n_stages=n_stages,
                                       learning_rate=learning_rate,
                                       max_depth=max_depth, seed=seed)

    n_match = len(X_train)
    tstr_abs, trtr_abs = [], []
    for f in range(folds):
        mask = fold_ids == f
        if n_match <= len(X_syn):
            pick = rng.choice(len(X_syn), size=n_match, replace=False) \
                if n_match < len(X_syn) else np.arange(len(X_syn))
        else:
            warnings.warn("synthetic data smaller than real train; sampling with replacement",
                          stacklevel=2)
            pick = rng.choice(len(X_syn), size=n_match, replace=True)
        tstr_model = fit_gradient_boosting(X_syn[pick], y_syn[pick], n_stages=n_stages,
                                           learning_rate=learning_rate,
                                           max_depth=max_depth, seed=seed)
        tstr_abs.append(np.abs(y_test[mask] - gb_predict(tstr_model, X_test[mask])))
        trtr_abs.append(np.abs(y_test[mask] - gb_predict(trtr_model, X_test[mask])))

    tstr_err = np.concatenate(tstr_abs)
    trtr_err = np.concatenate(trtr_abs)
    tstr_mae = float(tstr_err.mean())
    trtr_mae = float(trtr_err.mean())
    tstr_rmse = float(np.sqrt((tstr_err ** 2).mean()))
    trtr_rmse = float(np.sqrt((trtr_err ** 2).mean()))
    return PredictiveUtilityResult(
        tstr_mae=tstr_mae, tstr_rmse=tstr_rmse,
        trtr_mae=trtr_mae, trtr_rmse=trtr_rmse,
        d_mae=abs(tstr_mae - trtr_mae), d_rmse=abs(tstr_rmse - trtr_rmse),
        folds=folds,
    )
