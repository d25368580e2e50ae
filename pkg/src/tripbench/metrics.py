"""Histogram estimation and divergence measures (KLD, JSD, 1-D EMD)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .data_model import (
    CATEGORICAL_FEATURES,
    FEATURES,
    OOV_LABEL,
    EncodingSchema,
    TripDataset,
    partition_by_group,
)

DEFAULT_N_BINS = 48
DEFAULT_SMOOTHING = 1e-6
DEFAULT_MIN_GROUP_RECORDS = 30


@dataclass(frozen=True)
class ContinuousBinning:
    """Fixed equal-width bins; under/overflow is clamped into the end bins."""

    lo: float
    hi: float
    n_bins: int = DEFAULT_N_BINS

    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_bins + 1)


@dataclass(frozen=True)
class CategoricalBinning:
    """Train vocabulary plus one out-of-vocabulary bucket."""

    categories: tuple[str, ...]


@dataclass(frozen=True)
class Histogram:
    """A probability mass function over shared, ordered bins.

    For continuous data `support` holds the bin edges (length n_bins + 1);
    for categorical data it holds the category labels including the OOV
    bucket. Mass is non-negative and sums to one.
    """

    kind: str  # "continuous" | "categorical"
    support: tuple[float, ...] | tuple[str, ...]
    mass: np.ndarray

    def __post_init__(self):
        if self.kind not in ("continuous", "categorical"):
            raise ValueError(f"bad histogram kind {self.kind!r}")
        m = np.asarray(self.mass, dtype=float)
        object.__setattr__(self, "mass", m)
        if np.any(m < 0) or abs(m.sum() - 1.0) > 1e-9:
            raise ValueError("histogram mass must be non-negative and sum to 1")
        if self.kind == "continuous":
            edges = np.asarray(self.support, dtype=float)
            if len(edges) != len(m) + 1 or np.any(np.diff(edges) <= 0):
                raise ValueError("edges must be strictly increasing with n_bins + 1 entries")

    def centers(self) -> np.ndarray:
        edges = np.asarray(self.support, dtype=float)
        return 0.5 * (edges[:-1] + edges[1:])

    def same_bins(self, other: "Histogram") -> bool:
        return self.kind == other.kind and self.support == other.support


def _require_shared_bins(p: Histogram, q: Histogram) -> None:
    if not p.same_bins(q):
        raise ValueError("histograms are defined on different bins")


def build_histogram(values: Sequence, spec, alpha: float = DEFAULT_SMOOTHING) -> Histogram:
    """Build a smoothed probability histogram under a binning spec."""
    if len(values) == 0:
        raise ValueError("cannot build a histogram from an empty sample")
    if isinstance(spec, ContinuousBinning):
        arr = np.asarray(values, dtype=float)
        edges = spec.edges()
        if spec.hi == spec.lo:
            # degenerate train range: single logical bin
            edges = np.array([spec.lo - 0.5, spec.lo + 0.5])
        idx = np.clip(np.searchsorted(edges, arr, side="right") - 1, 0, len(edges) - 2)
        counts = np.bincount(idx, minlength=len(edges) - 1).astype(float)
        mass = counts / counts.sum()
        mass = (mass + alpha) / (1.0 + alpha * len(mass))
        return Histogram(kind="continuous", support=tuple(edges), mass=mass)
    if isinstance(spec, CategoricalBinning):
        labels = tuple(spec.categories) + (OOV_LABEL,)
        index = {v: i for i, v in enumerate(spec.categories)}
        counts = np.zeros(len(labels))
        for v in values:
            counts[index.get(v, len(labels) - 1)] += 1
        mass = counts / counts.sum()
        mass = (mass + alpha) / (1.0 + alpha * len(mass))
        return Histogram(kind="categorical", support=labels, mass=mass)
    raise TypeError(f"unknown binning spec {type(spec).__name__}")


def kld(p: Histogram, q: Histogram) -> float:
    """Kullback-Leibler divergence sum(p * ln(p/q)); asymmetric, unbounded."""
    _require_shared_bins(p, q)
    if np.any(q.mass <= 0):
        raise ValueError("reference histogram has zero-mass bins; smoothing required")
    pm = p.mass
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(pm > 0, pm * np.log(pm / q.mass), 0.0)
    return float(max(terms.sum(), 0.0))


def jsd(p: Histogram, q: Histogram) -> float:
    """Jensen-Shannon divergence in log base 2; symmetric, bounded to [0, 1]."""
    _require_shared_bins(p, q)
    m = 0.5 * (p.mass + q.mass)

    def _kl2(a, b):
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(a > 0, a * np.log2(a / b), 0.0)
        return terms.sum()

    value = 0.5 * _kl2(p.mass, m) + 0.5 * _kl2(q.mass, m)
    return float(min(max(value, 0.0), 1.0))


def emd_1d(p: Histogram, q: Histogram) -> float:
    """1-D earth mover's distance.

    Ordered supports use the exact CDF form sum(|CDF_p - CDF_q| * gap);
    categorical supports use the 0/1 ground distance, i.e. total variation.
    """
    _require_shared_bins(p, q)
    if p.kind == "categorical":
        return float(0.5 * np.abs(p.mass - q.mass).sum())
    centers = p.centers()
    cdf_gap = np.cumsum(p.mass - q.mass)[:-1]
    return float(np.abs(cdf_gap * np.diff(centers)).sum())


@dataclass(frozen=True)
class FeatureDivergence:
    kld: float
    jsd: float
    emd: float

    def to_dict(self) -> dict:
        return {"kld": self.kld, "jsd": self.jsd, "emd": self.emd}


def _mean_divergence(items: Sequence[FeatureDivergence],
                     weights: Sequence[float] | None = None) -> FeatureDivergence:
    w = np.asarray(weights, dtype=float) if weights is not None else np.ones(len(items))
    w = w / w.sum()
    return FeatureDivergence(
        kld=float(sum(wi * it.kld for wi, it in zip(w, items))),
        jsd=float(sum(wi * it.jsd for wi, it in zip(w, items))),
        emd=float(sum(wi * it.emd for wi, it in zip(w, items))),
    )


@dataclass(frozen=True)
class GroupDivergence:
    per_feature: Mapping[str, FeatureDivergence]
    aggregate: FeatureDivergence
    real_count: int
    syn_count: int


@dataclass(frozen=True)
class DivergenceReport:
    """Per-feature and aggregated divergences, optionally group-conditioned."""

    per_feature: Mapping[str, FeatureDivergence]
    aggregate: FeatureDivergence
    groups: Mapping[str, GroupDivergence] | None = None
    group_aggregate: FeatureDivergence | None = None
    skipped_groups: tuple[str, ...] = ()
    note: str = "passenger_id is excluded from all feature vectors"

    def to_dict(self) -> dict:
        out = {
            "per_feature": {f: d.to_dict() for f, d in sorted(self.per_feature.items())},
            "aggregate": self.aggregate.to_dict(),
            "note": self.note,
        }
        if self.groups is not None:
            out["groups"] = {
                g: {
                    "per_feature": {f: d.to_dict() for f, d in sorted(gd.per_feature.items())},
                    "aggregate": gd.aggregate.to_dict(),
                    "real_count": gd.real_count,
                    "syn_count": gd.syn_count,
                }
                for g, gd in sorted(self.groups.items())
            }
            out["group_aggregate"] = (self.group_aggregate.to_dict()
                                      if self.group_aggregate else None)
            out["skipped_groups"] = sorted(self.skipped_groups)
        return out


def _binning_for(feature: str, schema: EncodingSchema, n_bins: int):
    if feature in CATEGORICAL_FEATURES:
        return CategoricalBinning(categories=schema.categorical_maps[feature])
    # continuous: bin the min-max normalized values on [0, 1] so divergences
    # are in normalized units and all models share identical supports
    return ContinuousBinning(lo=0.0, hi=1.0, n_bins=n_bins)


def _feature_sample(ds: TripDataset, feature: str, schema: EncodingSchema):
    values = ds.feature_values(feature)
    if feature in CATEGORICAL_FEATURES:
        return values
    return [schema.normalize(feature, v) for v in values]


def divergence_profile(real: TripDataset, syn: TripDataset,
                       features: Sequence[str], schema: EncodingSchema,
                       n_bins: int = DEFAULT_N_BINS) -> DivergenceReport:
    """Per-feature marginal KLD/JSD/EMD between real and synthetic data."""
    real.require_nonempty()
    syn.require_nonempty()
    per_feature = {}
    for f in features:
        spec = _binning_for(f, schema, n_bins)
        p = build_histogram(_feature_sample(real, f, schema), spec)
        q = build_histogram(_feature_sample(syn, f, schema), spec)
        per_feature[f] = FeatureDivergence(kld=kld(p, q), jsd=jsd(p, q), emd=emd_1d(p, q))
    ordered = [per_feature[f] for f in sorted(per_feature)]
    return DivergenceReport(per_feature=per_feature, aggregate=_mean_divergence(ordered))


def group_divergence_profile(real: TripDataset, syn: TripDataset,
                             features: Sequence[str], group_feature: str,
                             schema: EncodingSchema,
                             n_bins: int = DEFAULT_N_BINS,
                             min_group_records: int = DEFAULT_MIN_GROUP_RECORDS) -> DivergenceReport:
    """Divergences conditioned on a grouping variable.

    Groups with fewer than `min_group_records` records in either dataset
    are skipped and reported; the group aggregate is a mean over retained
    groups weighted by real group size.
    """
    if group_feature not in CATEGORICAL_FEATURES:
        raise ValueError(f"group feature must be categorical, got {group_feature!r}")
    eval_features = [f for f in features if f != group_feature]
    real_groups = partition_by_group(real, group_feature)
    syn_groups = partition_by_group(syn, group_feature)

    groups: dict[str, GroupDivergence] = {}
    skipped: list[str] = []
    for value in sorted(set(real_groups) | set(syn_groups)):
        rg = real_groups.get(value)
        sg = syn_groups.get(value)
        if rg is None or sg is None or len(rg) < min_group_records or len(sg) < min_group_records:
            skipped.append(value)
            continue
        profile = divergence_profile(rg, sg, eval_features, schema, n_bins=n_bins)
        groups[value] = GroupDivergence(per_feature=profile.per_feature,
                                        aggregate=profile.aggregate,
                                        real_count=len(rg), syn_count=len(sg))
    if not groups:
        raise ValueError("no evaluable groups: every group was skipped")

    keys = sorted(groups)
    group_aggregate = _mean_divergence([groups[k].aggregate for k in keys],
                                       weights=[groups[k].real_count for k in keys])
    population = divergence_profile(real, syn, eval_features, schema, n_bins=n_bins)
    return DivergenceReport(per_feature=population.per_feature,
                            aggregate=population.aggregate,
                            groups=groups,
                            group_aggregate=group_aggregate,
                            skipped_groups=tuple(skipped))
