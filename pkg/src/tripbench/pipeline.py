"""Benchmark configuration and the per-model evaluation pipeline."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import generators
from .data_model import FEATURES, TripDataset, fit_encoding
from .learners import ForestParams
from .metrics import DEFAULT_MIN_GROUP_RECORDS, DEFAULT_N_BINS
from .privacy import AttackConfig, export_mia_distributions, knn_privacy_group, run_mia
from .representativeness import group_raw, known_od_pairs, population_raw, record_level_score
from .scoring import COMPARATIVE_NOTE, RawIndicators
from .utility import DEFAULT_FOLDS, DEFAULT_K_CLUSTERS, clustering_utility, tstr_trtr


class ConfigError(ValueError):
    """The benchmark configuration is malformed."""


_CONFIG_KEYS = {
    "train_csv", "holdout_csv", "test_csv", "out_dir", "seed", "features",
    "group_feature", "n_bins", "min_group_records", "knn_k", "k_clusters",
    "folds", "mia_n_trees", "mia_test_fraction", "models", "n_samples",
    "normalize_record_score", "constant_score", "knn_weighted_group_mean",
}

_MODEL_KEYS = {"name", "kind", "n_components", "epsilon", "structure", "seed"}


@dataclass(frozen=True)
class ModelSpec:
    name: str
    kind: str
    n_components: int = 6
    epsilon: float | None = None
    structure: dict | None = None
    seed: int | None = None


@dataclass(frozen=True)
class BenchmarkConfig:
    """Everything needed to reproduce a run from input files alone."""

    train_csv: str
    holdout_csv: str
    test_csv: str
    out_dir: str = "results"
    seed: int = 0
    features: tuple[str, ...] = FEATURES
    group_feature: str = "day_of_week"
    n_bins: int = DEFAULT_N_BINS
    min_group_records: int = DEFAULT_MIN_GROUP_RECORDS
    knn_k: int = 5
    k_clusters: int = DEFAULT_K_CLUSTERS
    folds: int = DEFAULT_FOLDS
    mia_n_trees: int = 100
    mia_test_fraction: float = 0.3
    models: tuple[ModelSpec, ...] = ()
    n_samples: int | None = None  # default: size of the train split
    normalize_record_score: bool = True
    constant_score: float = 1.0
    knn_weighted_group_mean: bool = False

    def to_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "models"}
        out["features"] = list(self.features)
        out["models"] = [
            {k: v for k, v in m.__dict__.items() if v is not None}
            for m in self.models
        ]
        return out


def parse_config(data: dict) -> BenchmarkConfig:
    """Strictly parse a config mapping; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    for required in ("train_csv", "holdout_csv", "test_csv"):
        if required not in data:
            raise ConfigError(f"missing required config key {required!r}")
    models = []
    for entry in data.get("models", []):
        unknown = set(entry) - _MODEL_KEYS
        if unknown:
            raise ConfigError(f"unknown model key(s): {sorted(unknown)}")
        if "kind" not in entry:
            raise ConfigError("every model entry needs a 'kind'")
        if entry["kind"] not in generators.GENERATOR_KINDS:
            raise ConfigError(f"unknown model kind {entry['kind']!r}; "
                              f"valid kinds: {list(generators.GENERATOR_KINDS)}")
        models.append(ModelSpec(name=entry.get("name", entry["kind"]), **{
            k: v for k, v in entry.items() if k != "name"}))
    kwargs = {k: v for k, v in data.items() if k != "models"}
    if "features" in kwargs:
        kwargs["features"] = tuple(kwargs["features"])
    return BenchmarkConfig(models=tuple(models), **kwargs)


def fit_generator(spec: ModelSpec, train: TripDataset, cfg: BenchmarkConfig,
                  model_index: int = 0) -> generators.GeneratorModel:
    seed = spec.seed if spec.seed is not None else cfg.seed + 1000 * (model_index + 1)
    if spec.kind == "independent":
        return generators.fit_independent(train, seed=seed)
    if spec.kind == "gmm":
        return generators.fit_gmm(train, n_components=spec.n_components, seed=seed)
    if spec.kind == "copula":
        return generators.fit_copula(train, seed=seed)
    if spec.kind == "bayes_net":
        return generators.fit_bayes_net(train, n_bins=cfg.n_bins, seed=seed,
                                        structure=spec.structure)
    if spec.kind == "priv_bayes":
        if spec.epsilon is None:
            raise ConfigError(f"model {spec.name!r}: priv_bayes requires 'epsilon'")
        return generators.fit_priv_bayes(train, epsilon=spec.epsilon,
                                         n_bins=cfg.n_bins, seed=seed,
                                         structure=spec.structure)
    raise ConfigError(f"unknown model kind {spec.kind!r}")


@dataclass
class ModelEvaluation:
    name: str
    indicators: RawIndicators
    detail: dict
    plot_data: dict = field(default_factory=dict)


def evaluate_model(name: str, syn: TripDataset,
                   train: TripDataset, holdout: TripDataset, test: TripDataset,
                   schema, cfg: BenchmarkConfig) -> ModelEvaluation:
    """Run all eight indicators for one synthetic dataset."""
    known_od = known_od_pairs(train, holdout)
    validity = record_level_score(syn, known_od)
    pop = population_raw(test, syn, cfg.features, schema, n_bins=cfg.n_bins)
    grp = group_raw(test, syn, cfg.features, schema,
                    group_feature=cfg.group_feature, n_bins=cfg.n_bins,
                    min_group_records=cfg.min_group_records)
    mia = run_mia(train, holdout, syn, cfg.features, schema,
                  attack_cfg=AttackConfig(test_fraction=cfg.mia_test_fraction,
                                          forest=ForestParams(n_trees=cfg.mia_n_trees),
                                          seed=cfg.seed))
    # privacy is measured against the training split: that is what a
    # generator can memorize
    knn = knn_privacy_group(train, syn, cfg.features, schema,
                            group_feature=cfg.group_feature, k=cfg.knn_k,
                            weighted_mean=cfg.knn_weighted_group_mean)
    clustering = clustering_utility(test, syn, cfg.features, schema,
                                    k_clusters=cfg.k_clusters, seed=cfg.seed)
    prediction = tstr_trtr(train, test, syn, cfg.features, schema,
                           folds=cfg.folds, seed=cfg.seed)

    indicators = RawIndicators(
        r_record=validity.score_r,
        r_group_kld=grp.group_aggregate.kld,
        r_group_jsd=grp.group_aggregate.jsd,
        r_group_emd=grp.group_aggregate.emd,
        r_pop_kld=pop.aggregate.kld,
        r_pop_jsd=pop.aggregate.jsd,
        r_pop_emd=pop.aggregate.emd,
        p_mia_mean=mia.mean_synthetic_confidence,
        p_knn_pop_ratio=knn.population_ratio,
        p_knn_group_mean=knn.group_mean,
        u_centroid_distance=clustering.centroid_distance,
        u_d_mae=prediction.d_mae,
        u_d_rmse=prediction.d_rmse,
    )
    detail = {
        "representativeness": {
            "record": validity.to_dict(),
            "population": pop.to_dict(),
            "group": grp.to_dict(),
        },
        "privacy": {
            "mia": mia.to_dict(),
            "knn": knn.to_dict(),
        },
        "utility": {
            "clustering": clustering.to_dict(),
            "prediction": prediction.to_dict(),
        },
        "note": COMPARATIVE_NOTE,
    }
    plot_data = {
        "mia_distributions": export_mia_distributions(mia),
        "pca_centroids": clustering.to_dict(),
        "divergence_tables": {"population": pop.to_dict(), "group": grp.to_dict()},
    }
    return ModelEvaluation(name=name, indicators=indicators, detail=detail,
                           plot_data=plot_data)


def evaluate_many(synthetic: dict[str, TripDataset],
                  train: TripDataset, holdout: TripDataset, test: TripDataset,
                  cfg: BenchmarkConfig, jobs: int = 1):
    """Evaluate several synthetic datasets; one model failing does not stop the run."""
    schema = fit_encoding(train, cfg.features)
    results: dict[str, ModelEvaluation] = {}
    failures: dict[str, str] = {}

    def _run(item):
        name, syn = item
        return name, evaluate_model(name, syn, train, holdout, test, schema, cfg)

    items = list(synthetic.items())
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {name: pool.submit(_run, (name, syn)) for name, syn in items}
        for name, _ in items:  # fixed assembly order
            try:
                results[name] = futures[name].result()[1]
            except Exception as exc:  # partial-failure policy
                failures[name] = f"{type(exc).__name__}: {exc}"
    else:
        for name, syn in items:
            try:
                results[name] = evaluate_model(name, syn, train, holdout, test, schema, cfg)
            except Exception as exc:
                failures[name] = f"{type(exc).__name__}: {exc}"
    return results, failures
