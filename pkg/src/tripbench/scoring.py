"""Cross-model min-max normalization and aggregation into dimension scores.

All scores are comparative: a low score means comparatively weaker
performance among the benchmarked models, not poor absolute performance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping

HIGHER_BETTER = "higher_better"
LOWER_BETTER = "lower_better"

INDICATOR_COLUMNS = ("R_r", "R_g", "R_p", "P_r", "P_g", "P_p", "U_cluster", "U_pred")

COMPARATIVE_NOTE = ("scores are min-max normalized across models; low values mean "
                    "comparatively weaker performance, not poor absolute performance")


@dataclass(frozen=True)
class RawIndicators:
    """Pre-normalization indicator values for one model."""

    r_record: float
    r_group_kld: float
    r_group_jsd: float
    r_group_emd: float
    r_pop_kld: float
    r_pop_jsd: float
    r_pop_emd: float
    p_mia_mean: float
    p_knn_pop_ratio: float
    p_knn_group_mean: float
    u_centroid_distance: float
    u_d_mae: float
    u_d_rmse: float

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"indicator {name} must be finite and >= 0, got {value}")
        if self.p_mia_mean > 1:
            raise ValueError("p_mia_mean must be <= 1")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class ScoreCard:
    """Normalized per-indicator scores plus dimension and overall means."""

    model: str
    R_r: float
    R_g: float
    R_p: float
    P_r: float
    P_g: float
    P_p: float
    U_cluster: float
    U_pred: float
    R: float
    P: float
    U: float
    overall: float
    note: str = COMPARATIVE_NOTE

    def indicator_row(self) -> list[float]:
        return [getattr(self, c) for c in INDICATOR_COLUMNS]

    def to_dict(self) -> dict:
        out = {c: getattr(self, c) for c in INDICATOR_COLUMNS}
        out.update({"R": self.R, "P": self.P, "U": self.U, "overall": self.overall,
                    "model": self.model, "note": self.note})
        return out


def minmax_normalize(values: Mapping[str, float], direction: str,
                     constant_score: float = 1.0) -> dict[str, float]:
    """Map raw values to [0, 1] with higher = better.

    Constant inputs map to `constant_score` for every model (no model is
    comparatively weaker when the indicator does not discriminate).
    """
    if direction not in (HIGHER_BETTER, LOWER_BETTER):
        raise ValueError(f"bad direction {direction!r}")
    if not values:
        raise ValueError("need at least one model")
    for model, v in values.items():
        if not math.isfinite(v):
            raise ValueError(f"non-finite value for model {model!r}: {v}")
    lo, hi = min(values.values()), max(values.values())
    if hi == lo:
        return {m: constant_score for m in values}
    out = {m: (v - lo) / (hi - lo) for m, v in values.items()}
    if direction == LOWER_BETTER:
        out = {m: 1.0 - s for m, s in out.items()}
    return out


# indicator name -> (direction, extractor)
_INDICATOR_SPEC = {
    "r_record": (HIGHER_BETTER, lambda r: r.r_record),
    "r_group_kld": (LOWER_BETTER, lambda r: r.r_group_kld),
    "r_group_jsd": (LOWER_BETTER, lambda r: r.r_group_jsd),
    "r_group_emd": (LOWER_BETTER, lambda r: r.r_group_emd),
    "r_pop_kld": (LOWER_BETTER, lambda r: r.r_pop_kld),
    "r_pop_jsd": (LOWER_BETTER, lambda r: r.r_pop_jsd),
    "r_pop_emd": (LOWER_BETTER, lambda r: r.r_pop_emd),
    "p_mia_mean": (LOWER_BETTER, lambda r: r.p_mia_mean),
    "p_knn_pop_ratio": (HIGHER_BETTER, lambda r: r.p_knn_pop_ratio),
    "p_knn_group_mean": (HIGHER_BETTER, lambda r: r.p_knn_group_mean),
    "u_centroid_distance": (LOWER_BETTER, lambda r: r.u_centroid_distance),
    "u_d_mae": (LOWER_BETTER, lambda r: r.u_d_mae),
    "u_d_rmse": (LOWER_BETTER, lambda r: r.u_d_rmse),
}


def build_scorecard(raw: Mapping[str, RawIndicators],
                    constant_score: float = 1.0,
                    normalize_record_score: bool = True) -> dict[str, ScoreCard]:
    """Normalize every indicator across models and aggregate per dimension.

    Normalization happens first, then averaging (fixed ordering). With
    min-max normalization, normalizing a lower-is-better raw value equals
    normalizing and then applying 1 - x, so gap inversions compose exactly.
    """
    if not raw:
        raise ValueError("need at least one model")
    if len(raw) < 2:
        warnings.warn("single-model scorecard: min-max comparison is uninformative",
                      stacklevel=2)

    normalized = {}
    for name, (direction, extract) in _INDICATOR_SPEC.items():
        values = {m: extract(r) for m, r in raw.items()}
        if name == "r_record" and not normalize_record_score:
            normalized[name] = dict(values)
        else:
            normalized[name] = minmax_normalize(values, direction,
                                                constant_score=constant_score)

    cards = {}
    for m in raw:
        n = {name: normalized[name][m] for name in normalized}
        R_r = n["r_record"]
        R_g = (n["r_group_kld"] + n["r_group_jsd"] + n["r_group_emd"]) / 3.0
        R_p = (n["r_pop_kld"] + n["r_pop_jsd"] + n["r_pop_emd"]) / 3.0
        P_r = n["p_mia_mean"]
        P_g = n["p_knn_group_mean"]
        P_p = n["p_knn_pop_ratio"]
        U_cluster = n["u_centroid_distance"]
        U_pred = (n["u_d_mae"] + n["u_d_rmse"]) / 2.0
        R = (R_r + R_g + R_p) / 3.0
        P = (P_r + P_g + P_p) / 3.0
        U = (U_cluster + U_pred) / 2.0
        cards[m] = ScoreCard(model=m, R_r=R_r, R_g=R_g, R_p=R_p,
                             P_r=P_r, P_g=P_g, P_p=P_p,
                             U_cluster=U_cluster, U_pred=U_pred,
                             R=R, P=P, U=U, overall=(R + P + U) / 3.0)
    return cards


def rank_models(cards: Mapping[str, ScoreCard], dimension: str = "overall") -> list[str]:
    """Model names sorted descending by a dimension; ties break by name."""
    if not cards:
        raise ValueError("no scorecards to rank")
    if dimension not in ("R", "P", "U", "overall"):
        raise ValueError(f"dimension must be R, P, U, or overall, got {dimension!r}")
    return sorted(cards, key=lambda m: (-getattr(cards[m], dimension), m))


def scorecard_csv(cards: Mapping[str, ScoreCard]) -> str:
    """Heat-map table: one row per model, one column per indicator."""
    lines = ["model," + ",".join(INDICATOR_COLUMNS)]
    for m in sorted(cards):
        row = ",".join(f"{v:.6f}" for v in cards[m].indicator_row())
        lines.append(f"{m},{row}")
    return "\n".join(lines) + "\n"
