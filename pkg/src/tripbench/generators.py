"""Statistical baseline generators producing synthetic trip datasets.

Five kinds: independent-marginal sampler, diagonal-covariance GMM fitted
with EM, Gaussian copula with rank transforms, a discrete Bayesian network
with Chow-Liu structure learning, and a Laplace-noised variant of the
Bayesian network. The noise mechanism is an educational baseline, NOT a
certified differential-privacy accountant.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri  # standard normal CDF / inverse CDF
from scipy.stats import rankdata

from .data_model import (
    CATEGORICAL_FEATURES,
    CONTINUOUS_FEATURES,
    FEATURES,
    TripDataset,
    TripRecord,
)

GENERATOR_KINDS = ("independent", "gmm", "copula", "bayes_net", "priv_bayes")
MODEL_FORMAT_VERSION = 1

_VAR_FLOOR = 1e-6
_WEIGHT_FLOOR = 1e-8


@dataclass(frozen=True)
class GeneratorModel:
    """A fitted generator; `params` holds kind-specific, JSON-serializable state."""

    kind: str
    params: dict
    seed: int
    epsilon: float | None = None

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; valid: {GENERATOR_KINDS}")


def _vocab(train: TripDataset, feature: str) -> list[str]:
    return list(dict.fromkeys(train.feature_values(feature)))


# ---------------------------------------------------------------------------
# independent marginals


def fit_independent(train: TripDataset, seed: int = 0) -> GeneratorModel:
    """Empirical marginal per feature; sampling draws features independently."""
    train.require_nonempty()
    marginals = {}
    for f in FEATURES:
        values = train.feature_values(f)
        uniq, counts = np.unique(np.asarray(values), return_counts=True)
        marginals[f] = {
            "values": [v.item() if hasattr(v, "item") else v for v in uniq],
            "probs": (counts / counts.sum()).tolist(),
        }
    return GeneratorModel(kind="independent", params={"marginals": marginals}, seed=seed)


# ---------------------------------------------------------------------------
# Gaussian mixture (EM, diagonal covariance) with per-component category tables


def _log_diag_gauss(X: np.ndarray, means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    # (n, k) log densities for diagonal Gaussians
    diff = X[:, None, :] - means[None, :, :]
    return -0.5 * ((diff ** 2) / variances[None, :, :]).sum(axis=2) \
        - 0.5 * np.log(2 * np.pi * variances).sum(axis=1)[None, :]


def fit_gmm(train: TripDataset, n_components: int = 5, seed: int = 0,
            max_iter: int = 200, tol: float = 1e-6) -> GeneratorModel:
    """EM on (start_min, end_min); categoricals get per-component frequency tables."""
    train.require_nonempty()
    if len(train) < n_components:
        raise ValueError("need at least n_components records")
    X = np.array([[r.start_min, r.end_min] for r in train.records], dtype=float)
    n = len(X)
    rng = np.random.default_rng(seed)

    means = X[rng.choice(n, size=n_components, replace=False)].astype(float)
    variances = np.tile(np.maximum(X.var(axis=0), _VAR_FLOOR), (n_components, 1))
    weights = np.full(n_components, 1.0 / n_components)

    ll_path = []
    resp = np.full((n, n_components), 1.0 / n_components)
    for _ in range(max_iter):
        log_p = _log_diag_gauss(X, means, variances) + np.log(weights)[None, :]
        log_norm = np.logaddexp.reduce(log_p, axis=1)
        ll = float(log_norm.sum())
        resp = np.exp(log_p - log_norm[:, None])
        if ll_path and ll - ll_path[-1] < tol:
            ll_path.append(ll)
            break
        ll_path.append(ll)
        nk = resp.sum(axis=0)
        weights = nk / n
        means = (resp.T @ X) / nk[:, None]
        variances = np.maximum(
            (resp.T @ (X ** 2)) / nk[:, None] - means ** 2, _VAR_FLOOR)

    keep = weights >= _WEIGHT_FLOOR
    if not keep.all():
        warnings.warn(f"pruned {int((~keep).sum())} collapsed GMM component(s)", stacklevel=2)
        weights, means, variances = weights[keep], means[keep], variances[keep]
        resp = resp[:, keep]
        weights = weights / weights.sum()

    cat_tables = {}
    for f in CATEGORICAL_FEATURES:
        vocab = _vocab(train, f)
        onehot = np.zeros((n, len(vocab)))
        index = {v: i for i, v in enumerate(vocab)}
        for i, r in enumerate(train.records):
            onehot[i, index[r.feature(f)]] = 1.0
        counts = resp.T @ onehot + 1e-12
        cat_tables[f] = {"vocab": vocab,
                         "probs": (counts / counts.sum(axis=1, keepdims=True)).tolist()}

    params = {
        "weights": weights.tolist(),
        "means": means.tolist(),
        "variances": variances.tolist(),
        "log_likelihood_path": ll_path,
        "categorical": cat_tables,
    }
    return GeneratorModel(kind="gmm", params=params, seed=seed)


# ---------------------------------------------------------------------------
# Gaussian copula


def _nearest_positive_definite(corr: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    vals, vecs = np.linalg.eigh(corr)
    vals = np.maximum(vals, floor)
    fixed = (vecs * vals) @ vecs.T
    scale = np.sqrt(np.diag(fixed))
    fixed = fixed / np.outer(scale, scale)
    return fixed


def fit_copula(train: TripDataset, seed: int = 0) -> GeneratorModel:
    """Rank-transform each marginal to latent normal, fit the correlation matrix."""
    train.require_nonempty()
    if len(train) < 10:
        raise ValueError("copula fitting needs at least 10 records")
    n = len(train)
    Z = np.zeros((n, len(FEATURES)))
    marginals = {}
    for j, f in enumerate(FEATURES):
        values = train.feature_values(f)
        if f in CONTINUOUS_FEATURES:
            arr = np.asarray(values, dtype=float)
            u = (rankdata(arr, method="average") - 0.5) / n
            Z[:, j] = ndtri(u)
            marginals[f] = {"kind": "continuous", "sorted_values": np.sort(arr).tolist()}
        else:
            vocab = _vocab(train, f)
            probs = np.array([values.count(v) for v in vocab], dtype=float)
            probs = probs / probs.sum()
            cum = np.concatenate([[0.0], np.cumsum(probs)])
            mid = {v: (cum[i] + cum[i + 1]) / 2.0 for i, v in enumerate(vocab)}
            Z[:, j] = ndtri([mid[v] for v in values])
            marginals[f] = {"kind": "categorical", "vocab": vocab, "probs": probs.tolist()}

    with np.errstate(invalid="ignore"):
        corr = np.corrcoef(Z.T)
    corr = np.where(np.isfinite(corr), corr, 0.0)
    np.fill_diagonal(corr, 1.0)
    corr = _nearest_positive_definite(corr)
    if not np.all(np.isfinite(np.linalg.cholesky(corr))):
        raise ValueError("correlation matrix is singular after projection")

    params = {"correlation": corr.tolist(), "marginals": marginals}
    return GeneratorModel(kind="copula", params=params, seed=seed)


# ---------------------------------------------------------------------------
# Bayesian network (Chow-Liu) and its Laplace-noised variant


def _discretize(train: TripDataset, n_bins: int):
    """Per-feature discrete codes plus the decoding tables."""
    codes = np.zeros((len(train), len(FEATURES)), dtype=int)
    cards = []
    decoders = {}
    for j, f in enumerate(FEATURES):
        values = train.feature_values(f)
        if f in CATEGORICAL_FEATURES:
            vocab = _vocab(train, f)
            index = {v: i for i, v in enumerate(vocab)}
            codes[:, j] = [index[v] for v in values]
            cards.append(len(vocab))
            decoders[f] = {"kind": "categorical", "vocab": vocab}
        else:
            arr = np.asarray(values, dtype=float)
            lo, hi = float(arr.min()), float(arr.max())
            if hi == lo:
                hi = lo + 1.0
            edges = np.linspace(lo, hi, n_bins + 1)
            codes[:, j] = np.clip(np.searchsorted(edges, arr, side="right") - 1, 0, n_bins - 1)
            cards.append(n_bins)
            decoders[f] = {"kind": "continuous", "edges": edges.tolist()}
    return codes, cards, decoders


def _mutual_information(joint: np.ndarray) -> float:
    total = joint.sum()
    if total <= 0:
        return 0.0
    p = joint / total
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p / (px * py)), 0.0)
    return float(max(terms.sum(), 0.0))


def _chow_liu_edges(mi: np.ndarray) -> list[tuple[int, int]]:
    """Maximum spanning tree over pairwise mutual information (Prim)."""
    d = mi.shape[0]
    in_tree = {0}
    edges = []
    while len(in_tree) < d:
        best = None
        for a in in_tree:
            for b in range(d):
                if b in in_tree:
                    continue
                if best is None or mi[a, b] > best[0]:
                    best = (mi[a, b], a, b)
        edges.append((best[1], best[2]))
        in_tree.add(best[2])
    return edges


def _validate_structure(parents: dict[str, str | None]) -> list[str]:
    """Topological order of a user-supplied parent map; raises on cycles."""
    order = []
    state = {}  # 0 visiting, 1 done

    def visit(f):
        if state.get(f) == 1:
            return
        if state.get(f) == 0:
            raise ValueError("structure contains a cycle; a DAG is required")
        state[f] = 0
        p = parents.get(f)
        if p is not None:
            visit(p)
        state[f] = 1
        order.append(f)

    for f in FEATURES:
        visit(f)
    return order


def _fit_bayes_net_impl(train: TripDataset, n_bins: int, seed: int,
                        epsilon: float | None,
                        structure: dict[str, str | None] | None) -> GeneratorModel:
    train.require_nonempty()
    codes, cards, decoders = _discretize(train, n_bins)
    d = len(FEATURES)
    noise_rng = np.random.default_rng(seed)

    n_pairs = d * (d - 1) // 2
    n_tables = n_pairs + d  # pairwise joints for structure + one count table per CPT
    laplace_scale = None
    if epsilon is not None:
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        laplace_scale = 1.0 / (epsilon / n_tables)  # sensitivity 1 per count table

    def _noisy(counts: np.ndarray) -> np.ndarray:
        if laplace_scale is None:
            return counts
        noisy = counts + noise_rng.laplace(0.0, laplace_scale, size=counts.shape)
        return np.maximum(noisy, 0.0)

    if structure is None:
        mi = np.zeros((d, d))
        for a in range(d):
            for b in range(a + 1, d):
                joint = np.zeros((cards[a], cards[b]))
                np.add.at(joint, (codes[:, a], codes[:, b]), 1.0)
                value = _mutual_information(_noisy(joint))
                mi[a, b] = mi[b, a] = value
        parents_idx = {0: None}
        for a, b in _chow_liu_edges(mi):
            parents_idx[b] = a
        parents = {FEATURES[i]: (FEATURES[p] if p is not None else None)
                   for i, p in parents_idx.items()}
    else:
        unknown = set(structure) - set(FEATURES)
        if unknown:
            raise ValueError(f"structure names unknown feature(s) {sorted(unknown)}")
        parents = {f: structure.get(f) for f in FEATURES}
    order = _validate_structure(parents)

    findex = {f: i for i, f in enumerate(FEATURES)}
    cpts = {}
    for f in FEATURES:
        j = findex[f]
        p = parents[f]
        if p is None:
            counts = np.bincount(codes[:, j], minlength=cards[j]).astype(float)
            counts = _noisy(counts) + 1.0  # add-one smoothing
            cpts[f] = {"parent": None, "probs": (counts / counts.sum()).tolist()}
        else:
            pj = findex[p]
            counts = np.zeros((cards[pj], cards[j]))
            np.add.at(counts, (codes[:, pj], codes[:, j]), 1.0)
            counts = _noisy(counts) + 1.0
            probs = counts / counts.sum(axis=1, keepdims=True)
            cpts[f] = {"parent": p, "probs": probs.tolist()}

    params = {
        "n_bins": n_bins,
        "parents": parents,
        "order": order,
        "cpts": cpts,
        "decoders": decoders,
    }
    kind = "bayes_net" if epsilon is None else "priv_bayes"
    return GeneratorModel(kind=kind, params=params, seed=seed, epsilon=epsilon)


def fit_bayes_net(train: TripDataset, n_bins: int = 48, seed: int = 0,
                  structure: dict[str, str | None] | None = None) -> GeneratorModel:
    """Chow-Liu tree (or user DAG) over discretized features, ancestral sampling."""
    return _fit_bayes_net_impl(train, n_bins=n_bins, seed=seed,
                               epsilon=None, structure=structure)


def fit_priv_bayes(train: TripDataset, epsilon: float, n_bins: int = 48, seed: int = 0,
                   structure: dict[str, str | None] | None = None) -> GeneratorModel:
    """Bayes net with Laplace noise on every count table (budget split equally)."""
    return _fit_bayes_net_impl(train, n_bins=n_bins, seed=seed,
                               epsilon=epsilon, structure=structure)


# ---------------------------------------------------------------------------
# sampling


def _sample_independent(model, n, rng):
    cols = {}
    for f in FEATURES:
        m = model.params["marginals"][f]
        cols[f] = rng.choice(len(m["values"]), size=n, p=np.asarray(m["probs"]))
    records = []
    for i in range(n):
        fields = {}
        for f in FEATURES:
            v = model.params["marginals"][f]["values"][int(cols[f][i])]
            fields[f] = int(v) if f in CONTINUOUS_FEATURES else v
        records.append(fields)
    return records


def _sample_gmm(model, n, rng):
    weights = np.asarray(model.params["weights"])
    means = np.asarray(model.params["means"])
    sds = np.sqrt(np.asarray(model.params["variances"]))
    comp = rng.choice(len(weights), size=n, p=weights)
    cont = means[comp] + rng.standard_normal((n, 2)) * sds[comp]
    records = []
    cat = model.params["categorical"]
    for i in range(n):
        fields = {"start_min": int(round(cont[i, 0])), "end_min": int(round(cont[i, 1]))}
        for f in CATEGORICAL_FEATURES:
            table = cat[f]
            probs = np.asarray(table["probs"][comp[i]])
            fields[f] = table["vocab"][int(rng.choice(len(probs), p=probs))]
        records.append(fields)
    return records


def _sample_copula(model, n, rng):
    corr = np.asarray(model.params["correlation"])
    chol = np.linalg.cholesky(corr)
    z = rng.standard_normal((n, corr.shape[0])) @ chol.T
    u = ndtr(z)
    records = [dict() for _ in range(n)]
    for j, f in enumerate(FEATURES):
        m = model.params["marginals"][f]
        if m["kind"] == "continuous":
            values = np.quantile(np.asarray(m["sorted_values"]), u[:, j])
            for i in range(n):
                records[i][f] = int(round(values[i]))
        else:
            cum = np.cumsum(np.asarray(m["probs"]))
            idx = np.minimum(np.searchsorted(cum, u[:, j], side="right"), len(cum) - 1)
            for i in range(n):
                records[i][f] = m["vocab"][int(idx[i])]
    return records


def _sample_bayes_net(model, n, rng):
    params = model.params
    codes = {}
    for f in params["order"]:
        cpt = params["cpts"][f]
        if cpt["parent"] is None:
            probs = np.asarray(cpt["probs"])
            codes[f] = rng.choice(len(probs), size=n, p=probs)
        else:
            probs = np.asarray(cpt["probs"])
            parent_codes = codes[cpt["parent"]]
            draws = np.empty(n, dtype=int)
            for pv in np.unique(parent_codes):
                mask = parent_codes == pv
                draws[mask] = rng.choice(probs.shape[1], size=int(mask.sum()), p=probs[pv])
            codes[f] = draws
    records = [dict() for _ in range(n)]
    for f in FEATURES:
        dec = params["decoders"][f]
        if dec["kind"] == "categorical":
            for i in range(n):
                records[i][f] = dec["vocab"][int(codes[f][i])]
        else:
            edges = np.asarray(dec["edges"])
            lo = edges[codes[f]]
            hi = edges[codes[f] + 1]
            values = lo + rng.random(n) * (hi - lo)
            for i in range(n):
                records[i][f] = int(round(values[i]))
    return records


_SAMPLERS = {
    "independent": _sample_independent,
    "gmm": _sample_gmm,
    "copula": _sample_copula,
    "bayes_net": _sample_bayes_net,
    "priv_bayes": _sample_bayes_net,
}


def sample(model: GeneratorModel, n: int, seed: int | None = None,
           source_label: str | None = None) -> TripDataset:
    """Draw exactly n synthetic trips; deterministic for a given seed.

    No post-hoc validity filtering is applied: time-ordering violations and
    unseen OD pairs are kept so record-level validity checks have signal.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(model.seed if seed is None else seed)
    fields = _SAMPLERS[model.kind](model, n, rng)
    records = tuple(
        TripRecord(passenger_id=f"syn{i:06d}", **f) for i, f in enumerate(fields)
    )
    return TripDataset(records=records, role="synthetic",
                       source_label=source_label or model.kind)


# ---------------------------------------------------------------------------
# model persistence


def save_model(model: GeneratorModel, path) -> None:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "seed": model.seed,
        "epsilon": model.epsilon,
        "params": model.params,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_model(path) -> GeneratorModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model file version {payload.get('format_version')!r}")
    return GeneratorModel(kind=payload["kind"], params=payload["params"],
                          seed=payload["seed"], epsilon=payload["epsilon"])
