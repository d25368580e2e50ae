"""Seeded synthetic ground-truth world for demos and end-to-end tests.

The world has the correlations the benchmark is designed to detect:
destinations depend on origins (only a sparse set of OD pairs exists),
start times depend on the day of the week (commute peaks on weekdays,
a midday hump on weekends), and trip duration depends on the OD pair.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

from .data_model import DAYS_OF_WEEK, TripDataset, TripRecord, save_csv

STATIONS = ("ADM", "CEN", "TST", "MKK", "KOT", "SHT", "TAW", "FOT", "UNI", "TAP", "SHS", "LOW")

_DAY_WEIGHTS = (0.16, 0.16, 0.16, 0.16, 0.16, 0.11, 0.09)
_ORIGIN_WEIGHTS = np.array([0.16, 0.14, 0.12, 0.10, 0.09, 0.08, 0.07, 0.07, 0.06, 0.05, 0.03, 0.03])
# each origin serves four destinations at fixed ring offsets
_DEST_OFFSETS = (1, 2, 3, 6)
_DEST_WEIGHTS = (0.4, 0.3, 0.2, 0.1)


def allowed_od_pairs() -> set[tuple[str, str]]:
    pairs = set()
    for i, origin in enumerate(STATIONS):
        for off in _DEST_OFFSETS:
            pairs.add((origin, STATIONS[(i + off) % len(STATIONS)]))
    return pairs


def _sample_start(day: str, rng: np.random.Generator) -> int:
    if day in ("Sat", "Sun"):
        t = rng.normal(800, 150)
    else:
        u = rng.random()
        if u < 0.5:
            t = rng.normal(480, 60)   # morning commute
        elif u < 0.85:
            t = rng.normal(1050, 70)  # evening commute
        else:
            t = rng.uniform(360, 1320)
    return int(np.clip(round(t), 300, 1380))


def make_world(n: int, seed: int, role: str, source_label: str = "real",
               passenger_prefix: str = "p") -> TripDataset:
    """Draw n trips from the seeded ground-truth distribution."""
    rng = np.random.default_rng(seed)
    n_passengers = max(1, n // 4)
    records = []
    for i in range(n):
        day = str(rng.choice(DAYS_OF_WEEK, p=_DAY_WEIGHTS))
        oi = int(rng.choice(len(STATIONS), p=_ORIGIN_WEIGHTS))
        off = int(rng.choice(_DEST_OFFSETS, p=_DEST_WEIGHTS))
        origin = STATIONS[oi]
        destination = STATIONS[(oi + off) % len(STATIONS)]
        start = _sample_start(day, rng)
        duration = max(5, int(round(12 + 6 * off + rng.normal(0, 4))))
        end = min(start + duration, 1439)
        if end <= start:
            end = start + 1
        records.append(TripRecord(
            passenger_id=f"{passenger_prefix}{i % n_passengers:05d}",
            origin=origin, destination=destination,
            start_min=start, end_min=end, day_of_week=day,
        ))
    return TripDataset(records=tuple(records), role=role, source_label=source_label)


def demo_config(data_dir: str, out_dir: str, seed: int = 7) -> dict:
    """Benchmark config covering all five statistical generator baselines."""
    return {
        "train_csv": f"{data_dir}/train.csv",
        "holdout_csv": f"{data_dir}/holdout.csv",
        "test_csv": f"{data_dir}/test.csv",
        "seed": seed,
        "n_bins": 48,
        "group_feature": "day_of_week",
        "min_group_records": 30,
        "knn_k": 5,
        "k_clusters": 8,
        "folds": 5,
        "mia_n_trees": 100,
        "mia_test_fraction": 0.3,
        "out_dir": out_dir,
        "models": [
            {"name": "independent", "kind": "independent"},
            {"name": "gmm", "kind": "gmm", "n_components": 6},
            {"name": "copula", "kind": "copula"},
            {"name": "bayes_net", "kind": "bayes_net"},
            {"name": "priv_bayes_eps0.1", "kind": "priv_bayes", "epsilon": 0.1},
        ],
    }


def write_demo(out_dir, seed: int = 7, n_train: int = 4000,
               n_holdout: int = 1500, n_test: int = 1500) -> Path:
    """Write train/holdout/test CSVs plus a ready-to-run benchmark config."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    splits = {
        "train": make_world(n_train, seed, "train"),
        "holdout": make_world(n_holdout, seed + 1, "holdout"),
        "test": make_world(n_test, seed + 2, "holdout"),
    }
    for name, ds in splits.items():
        save_csv(ds, out / f"{name}.csv")
    config = demo_config(str(out), str(out / "results"), seed=seed)
    config_path = out / "demo_config.json"
    with open(config_path, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
    return config_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="write the bundled demo dataset and config")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    config_path = write_demo(args.out, seed=args.seed)
    print(f"wrote demo data and config: {config_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
