"""Shared fixtures: seeded trip worlds at various sizes."""

import numpy as np
import pytest

from tripbench.data_model import DAYS_OF_WEEK, TripDataset, TripRecord, fit_encoding
from tripbench.demo import (
    _DAY_WEIGHTS,
    _DEST_OFFSETS,
    _DEST_WEIGHTS,
    _ORIGIN_WEIGHTS,
    STATIONS,
    make_world,
)


def fast_world(n: int, seed: int, role: str = "train",
               source_label: str = "real", start_shift: int = 0) -> TripDataset:
    """Vectorized draw from the demo ground-truth distribution.

    Same generative story as demo.make_world but batched, so the large
    fixtures (50k+ rows) stay cheap. `start_shift` translates every start
    time, which makes splits distinguishable when a test needs leakage.
    """
    rng = np.random.default_rng(seed)
    day_idx = rng.choice(len(DAYS_OF_WEEK), size=n, p=_DAY_WEIGHTS)
    oi = rng.choice(len(STATIONS), size=n, p=_ORIGIN_WEIGHTS)
    off = rng.choice(_DEST_OFFSETS, size=n, p=_DEST_WEIGHTS)

    weekend = day_idx >= 5
    starts = np.empty(n)
    starts[weekend] = rng.normal(800, 150, size=int(weekend.sum()))
    wk = ~weekend
    n_wk = int(wk.sum())
    u = rng.random(n_wk)
    t = np.where(u < 0.5, rng.normal(480, 60, size=n_wk),
                 np.where(u < 0.85, rng.normal(1050, 70, size=n_wk),
                          rng.uniform(360, 1320, size=n_wk)))
    starts[wk] = t
    starts = np.clip(np.round(starts), 300, 1380).astype(int) + start_shift

    durations = np.maximum(5, np.round(12 + 6 * off + rng.normal(0, 4, size=n))).astype(int)
    ends = np.minimum(starts + durations, 1439)
    ends = np.where(ends <= starts, starts + 1, ends)

    n_pass = max(1, n // 4)
    records = tuple(
        TripRecord(
            passenger_id=f"p{i % n_pass:05d}",
            origin=STATIONS[oi[i]],
            destination=STATIONS[(oi[i] + off[i]) % len(STATIONS)],
            start_min=int(starts[i]),
            end_min=int(ends[i]),
            day_of_week=DAYS_OF_WEEK[day_idx[i]],
        )
        for i in range(n)
    )
    return TripDataset(records=records, role=role, source_label=source_label)


@pytest.fixture(scope="session")
def world_train():
    return make_world(1200, seed=11, role="train")


@pytest.fixture(scope="session")
def world_holdout():
    return make_world(600, seed=12, role="holdout")


@pytest.fixture(scope="session")
def world_test():
    return make_world(600, seed=13, role="holdout")


@pytest.fixture(scope="session")
def world_schema(world_train):
    return fit_encoding(world_train)
