"""ML primitives used by the evaluators.

Random-forest classification and the regression trees inside gradient
boosting are delegated to scikit-learn; the boosting loop, K-Means,
exact k-NN, 2-D PCA, and ROC-AUC are implemented here so their traces
and determinism guarantees are fully under our control.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata
from sklearn.ensemble import RandomForestClassifier
from sklearn.tree import DecisionTreeRegressor


# ---------------------------------------------------------------------------
# random forest


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 1
    max_features: str | int | None = "sqrt"
    bootstrap: bool = True


@dataclass
class RandomForest:
    estimator: RandomForestClassifier
    n_features: int
    seed: int


def fit_random_forest(X: np.ndarray, y: np.ndarray,
                      params: ForestParams = ForestParams(), seed: int = 0) -> RandomForest:
    """Fit a seeded random-forest classifier on a binary labeled matrix."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if len(X) != len(y) or len(X) < 2:
        raise ValueError("X and y must have equal length >= 2")
    if len(np.unique(y)) < 2:
        raise ValueError("both classes must be present in y")
    est = RandomForestClassifier(
        n_estimators=params.n_trees,
        max_depth=params.max_depth,
        min_samples_leaf=params.min_samples_leaf,
        max_features=params.max_features,
        bootstrap=params.bootstrap,
        criterion="gini",
        random_state=seed,
        n_jobs=1,
    )
    est.fit(X, y)
    return RandomForest(estimator=est, n_features=X.shape[1], seed=seed)


def rf_predict_proba(model: RandomForest, X: np.ndarray) -> np.ndarray:
    """Class-1 probability per row (mean of per-tree leaf class frequencies)."""
    X = np.asarray(X, dtype=float)
    if X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} columns, got {X.shape[1]}")
    proba = model.estimator.predict_proba(X)
    classes = list(model.estimator.classes_)
    return proba[:, classes.index(1)]


# ---------------------------------------------------------------------------
# ROC-AUC


def roc_auc(y_true: np.ndarray, scores: np.ndarray) -> float:
    """Mann-Whitney ROC-AUC; tied scores contribute one half."""
    y_true = np.asarray(y_true)
    scores = np.asarray(scores, dtype=float)
    if len(y_true) != len(scores):
        raise ValueError("y_true and scores must have equal length")
    n_pos = int((y_true == 1).sum())
    n_neg = int((y_true == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both classes must be present")
    ranks = rankdata(scores)  # average ranks handle ties
    u = ranks[y_true == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


# ---------------------------------------------------------------------------
# gradient boosting


@dataclass
class GradientBoostingModel:
    base_prediction: float
    trees: list = field(default_factory=list)
    learning_rate: float = 0.1
    n_stages: int = 100
    train_mse_path: list[float] = field(default_factory=list)


def fit_gradient_boosting(X: np.ndarray, y: np.ndarray,
                          n_stages: int = 100, learning_rate: float = 0.1,
                          max_depth: int = 3, seed: int = 0) -> GradientBoostingModel:
    """Squared-error boosting: each stage fits a depth-limited tree to residuals."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(X) != len(y) or len(X) < 10:
        raise ValueError("need matched X, y with at least 10 rows")
    if np.ptp(y) == 0:
        warnings.warn("constant regression target: model degenerates to the mean",
                      stacklevel=2)
    base = float(y.mean())
    pred = np.full(len(y), base)
    model = GradientBoostingModel(base_prediction=base, learning_rate=learning_rate,
                                  n_stages=n_stages)
    model.train_mse_path.append(float(np.mean((y - pred) ** 2)))
    for stage in range(n_stages):
        residual = y - pred
        tree = DecisionTreeRegressor(max_depth=max_depth, random_state=seed + stage)
        tree.fit(X, residual)
        pred = pred + learning_rate * tree.predict(X)
        model.trees.append(tree)
        model.train_mse_path.append(float(np.mean((y - pred) ** 2)))
    return model


def gb_predict(model: GradientBoostingModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    pred = np.full(len(X), model.base_prediction)
    for tree in model.trees:
        pred = pred + model.learning_rate * tree.predict(X)
    return pred


# ---------------------------------------------------------------------------
# K-Means


@dataclass
class KMeansModel:
    centroids: np.ndarray
    inertia: float
    n_iter_run: int
    # (inertia after assignment, inertia after centroid update) per iteration
    inertia_trace: list[tuple[float, float]] = field(default_factory=list)


def _assign(X: np.ndarray, centroids: np.ndarray):
    d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    return labels, float(d2[np.arange(len(X)), labels].sum())


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centroids = [X[rng.integers(len(X))]]
    for _ in range(1, k):
        d2 = np.min(((X[:, None, :] - np.asarray(centroids)[None, :, :]) ** 2).sum(axis=2), axis=1)
        total = d2.sum()
        if total == 0:
            centroids.append(X[rng.integers(len(X))])
            continue
        centroids.append(X[rng.choice(len(X), p=d2 / total)])
    return np.asarray(centroids)


def _kmeans_single(X, k, rng, max_iter, tol) -> KMeansModel:
    centroids = _kmeans_pp_init(X, k, rng)
    trace = []
    labels = None
    for it in range(1, max_iter + 1):
        labels, inertia_assign = _assign(X, centroids)
        new_centroids = centroids.copy()
        for j in range(k):
            members = X[labels == j]
            if len(members):
                new_centroids[j] = members.mean(axis=0)
            else:
                # re-seed an empty cluster at the point farthest from its centroid
                d2 = ((X - centroids[labels]) ** 2).sum(axis=1)
                new_centroids[j] = X[d2.argmax()]
        inertia_update = float(((X - new_centroids[labels]) ** 2).sum())
        trace.append((inertia_assign, inertia_update))
        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        if shift < tol:
            break
    _, final_inertia = _assign(X, centroids)
    return KMeansModel(centroids=centroids, inertia=final_inertia,
                       n_iter_run=it, inertia_trace=trace)


def kmeans_fit(X: np.ndarray, k: int, seed: int = 0,
               n_restarts: int = 10, max_iter: int = 300, tol: float = 1e-6) -> KMeansModel:
    """K-Means with k-means++ seeding; best of `n_restarts` by inertia."""
    X = np.asarray(X, dtype=float)
    if k < 1 or k > len(X):
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={len(X)}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_restarts):
        candidate = _kmeans_single(X, k, rng, max_iter, tol)
        if best is None or candidate.inertia < best.inertia:
            best = candidate
    return best


# ---------------------------------------------------------------------------
# exact k-NN


@dataclass(frozen=True)
class KnnIndex:
    points: np.ndarray

    def __len__(self) -> int:
        return len(self.points)


def build_knn_index(points: np.ndarray) -> KnnIndex:
    return KnnIndex(points=np.asarray(points, dtype=float))


def knn_distances(index: KnnIndex, Q: np.ndarray, k: int,
                  chunk_size: int = 64) -> np.ndarray:
    """Exact Euclidean distances to the k nearest indexed points, ascending."""
    Q = np.asarray(Q, dtype=float)
    if k < 1 or k > len(index):
        raise ValueError(f"need 1 <= k <= index size ({len(index)}), got k={k}")
    X = index.points
    out = np.empty((len(Q), k))
    for start in range(0, len(Q), chunk_size):
        chunk = Q[start:start + chunk_size]
        d = np.sqrt(((chunk[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))
        if k < d.shape[1]:
            part = np.partition(d, k - 1, axis=1)[:, :k]
        else:
            part = d
        out[start:start + len(chunk)] = np.sort(part, axis=1)
    return out


# ---------------------------------------------------------------------------
# 2-D PCA


def pca_2d(X: np.ndarray) -> tuple[np.ndarray, tuple[float, float]]:
    """Mean-centered projection onto the top two principal axes.

    Sign convention: the largest-magnitude loading of each axis is positive.
    Returns the n x 2 projection and the explained variances of both axes.
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if n < 2 or d < 2:
        raise ValueError("need at least 2 rows and 2 columns")
    centered = X - X.mean(axis=0)
    if np.allclose(centered, 0):
        raise ValueError("zero-variance data has no principal axes")
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:2].copy()
    for i in range(2):
        j = np.argmax(np.abs(components[i]))
        if components[i, j] < 0:
            components[i] = -components[i]
    projection = centered @ components.T
    variances = (s[:2] ** 2) / (n - 1)
    if len(variances) < 2:
        variances = np.concatenate([variances, [0.0]])
    return projection, (float(variances[0]), float(variances[1]))
