"""Clustering-centroid agreement and TSTR/TRTR prediction gaps."""

import numpy as np
import pytest

from tripbench.data_model import FEATURES, TripDataset, TripRecord, fit_encoding
from tripbench.utility import clustering_utility, tstr_trtr

from conftest import fast_world


def _with_times(ds, start_delta=0, end_delta=0, role="synthetic"):
    recs = tuple(
        TripRecord(passenger_id=r.passenger_id, origin=r.origin,
                   destination=r.destination,
                   start_min=r.start_min + start_delta,
                   end_min=r.end_min + end_delta,
                   day_of_week=r.day_of_week)
        for r in ds.records)
    return TripDataset(records=recs, role=role)


class TestClusteringUtility:
    def test_identical_inputs_zero_distance(self, world_test, world_schema):
        syn = TripDataset(records=world_test.records, role="synthetic")
        res = clustering_utility(world_test, syn, FEATURES, world_schema,
                                 k_clusters=4, seed=0)
        assert res.centroid_distance == 0.0

    def test_translation_equivariance(self):
        real = fast_world(800, seed=31, role="holdout")
        schema = fit_encoding(fast_world(800, seed=30))
        syn = _with_times(real, start_delta=5, end_delta=7)
        res = clustering_utility(real, syn, FEATURES, schema, k_clusters=4, seed=0)
        s_lo, s_hi = schema.continuous_ranges["start_min"]
        e_lo, e_hi = schema.continuous_ranges["end_min"]
        v = np.array([5.0 / (s_hi - s_lo), 7.0 / (e_hi - e_lo)])
        assert res.centroid_distance == pytest.approx(np.linalg.norm(v), rel=1e-6)

    def test_symmetric_in_arguments(self, world_test, world_schema):
        syn = fast_world(400, seed=32, role="synthetic")
        a = clustering_utility(world_test, syn, FEATURES, world_schema,
                               k_clusters=4, seed=0).centroid_distance
        b = clustering_utility(
            TripDataset(records=syn.records, role="holdout"),
            TripDataset(records=world_test.records, role="synthetic"),
            FEATURES, world_schema, k_clusters=4, seed=0).centroid_distance
        assert a == pytest.approx(b, abs=1e-12)

    def test_noise_worse_than_resample(self, world_test, world_schema):
        resample = fast_world(600, seed=33, role="synthetic")
        rng = np.random.default_rng(34)
        noise_recs = tuple(
            TripRecord(passenger_id=f"n{i}",
                       origin=str(rng.choice(["ADM", "LOW"])),
                       destination=str(rng.choice(["TAP", "UNI"])),
                       start_min=int(rng.integers(0, 1440)),
                       end_min=int(rng.integers(0, 1440)),
                       day_of_week=str(rng.choice(["Mon", "Sun"])))
            for i in range(600))
        noise = TripDataset(records=noise_recs, role="synthetic")
        d_resample = clustering_utility(world_test, resample, FEATURES, world_schema,
                                        k_clusters=4, seed=0).centroid_distance
        d_noise = clustering_utility(world_test, noise, FEATURES, world_schema,
                                     k_clusters=4, seed=0).centroid_distance
        assert d_noise > d_resample

    def test_pca_payload_shapes(self, world_test, world_schema):
        syn = fast_world(400, seed=35, role="synthetic")
        res = clustering_utility(world_test, syn, FEATURES, world_schema,
                                 k_clusters=4, seed=0)
        d = res.to_dict()
        assert len(d["pca_real_centroids"]) == 4
        assert len(d["pca_syn_centroids"]) == 4
        assert all(len(pt) == 2 for pt in d["pca_real_centroids"])

    def test_deterministic(self, world_test, world_schema):
        syn = fast_world(400, seed=36, role="synthetic")
        a = clustering_utility(world_test, syn, FEATURES, world_schema,
                               k_clusters=4, seed=1).centroid_distance
        b = clustering_utility(world_test, syn, FEATURES, world_schema,
                               k_clusters=4, seed=1).centroid_distance
        assert a == b


class TestTstrTrtr:
    def test_identity_data_zero_gap(self, world_train, world_test, world_schema):
        syn = TripDataset(records=world_train.records, role="synthetic")
        res = tstr_trtr(world_train, world_test, syn, FEATURES, world_schema,
                        folds=3, seed=0, n_stages=30)
        assert res.d_mae == 0.0
        assert res.d_rmse == 0.0

    def test_shuffled_durations_hurt_tstr(self, world_train, world_test, world_schema):
        rng = np.random.default_rng(41)
        durations = np.array([r.end_min - r.start_min for r in world_train.records])
        rng.shuffle(durations)
        recs = tuple(
            TripRecord(passenger_id=r.passenger_id, origin=r.origin,
                       destination=r.destination, start_min=r.start_min,
                       end_min=min(int(r.start_min + d), 1439) if d > 0 else r.start_min + 1,
                       day_of_week=r.day_of_week)
            for r, d in zip(world_train.records, durations))
        syn = TripDataset(records=recs, role="synthetic")
        res = tstr_trtr(world_train, world_test, syn, FEATURES, world_schema,
                        folds=3, seed=0, n_stages=30)
        assert res.tstr_mae > 1.2 * res.trtr_mae
        assert res.d_mae > 0

    def test_fold_count_stability(self, world_train, world_test, world_schema):
        syn = fast_world(1200, seed=42, role="synthetic")
        r2 = tstr_trtr(world_train, world_test, syn, FEATURES, world_schema,
                       folds=2, seed=0, n_stages=30)
        r5 = tstr_trtr(world_train, world_test, syn, FEATURES, world_schema,
                       folds=5, seed=0, n_stages=30)
        assert abs(r2.trtr_mae - r5.trtr_mae) <= 0.10 * r5.trtr_mae

    def test_rmse_at_least_mae(self, world_train, world_test, world_schema):
        syn = fast_world(1200, seed=43, role="synthetic")
        res = tstr_trtr(world_train, world_test, syn, FEATURES, world_schema,
                        folds=3, seed=0, n_stages=30)
        assert res.tstr_rmse >= res.tstr_mae
        assert res.trtr_rmse >= res.trtr_mae
        assert res.d_mae >= 0 and res.d_rmse >= 0

    def test_constant_target_warns_not_errors(self, world_train, world_test, world_schema):
        recs = tuple(
            TripRecord(passenger_id=r.passenger_id, origin=r.origin,
                       destination=r.destination, start_min=r.start_min,
                       end_min=r.start_min + 30, day_of_week=r.day_of_week)
            for r in world_train.records)
        syn = TripDataset(records=recs, role="synthetic")
        with pytest.warns(UserWarning, match="constant"):
            res = tstr_trtr(world_train, world_test, syn, FEATURES, world_schema,
                            folds=2, seed=0, n_stages=10)
        assert np.isfinite(res.d_mae)

    def test_undersized_synthetic_warns(self, world_train, world_test, world_schema):
        syn = fast_world(300, seed=44, role="synthetic")
        with pytest.warns(UserWarning, match="replacement"):
            tstr_trtr(world_train, world_test, syn, FEATURES, world_schema,
                      folds=2, seed=0, n_stages=10)

    def test_too_few_folds_rejected(self, world_train, world_test, world_schema):
        syn = fast_world(1200, seed=45, role="synthetic")
        with pytest.raises(ValueError, match="folds"):
            tstr_trtr(world_train, world_test, syn, FEATURES, world_schema, folds=1)
