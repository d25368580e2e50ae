"""CSV ingestion, encoding round trips, and group partitioning."""

import csv

import numpy as np
import pytest

from tripbench.data_model import (
    CSV_HEADER,
    EmptyDatasetError,
    ParseError,
    SchemaError,
    TripDataset,
    TripRecord,
    decode,
    encode,
    fit_encoding,
    load_csv,
    partition_by_group,
    save_csv,
)


def _rec(pid="p1", o="A", d="B", s=480, e=510, day="Tue"):
    return TripRecord(passenger_id=pid, origin=o, destination=d,
                      start_min=s, end_min=e, day_of_week=day)


def _ds(records, role="train"):
    return TripDataset(records=tuple(records), role=role)


def _write_csv(path, rows, header=CSV_HEADER):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


class TestTripRecord:
    def test_bad_day_rejected(self):
        with pytest.raises(ValueError, match="day_of_week"):
            _rec(day="Funday")

    def test_non_integer_time_rejected(self):
        with pytest.raises(ValueError, match="integers"):
            TripRecord(passenger_id="p", origin="A", destination="B",
                       start_min=480.5, end_min=510, day_of_week="Mon")

    def test_feature_accessor(self):
        r = _rec()
        assert r.feature("origin") == "A"
        assert r.feature("start_min") == 480
        with pytest.raises(ValueError):
            r.feature("passenger_id")


class TestLoadCsv:
    def test_three_rows(self, tmp_path):
        p = tmp_path / "t.csv"
        _write_csv(p, [
            ["p1", "A", "B", 480, 510, "Mon"],
            ["p2", "B", "C", 600, 630, "Tue"],
            ["p1", "A", "C", 700, 750, "Wed"],
        ])
        ds = load_csv(p, role="train")
        assert len(ds) == 3
        assert ds.role == "train"
        assert ds.records[1].origin == "B"

    def test_header_only_is_empty(self, tmp_path):
        p = tmp_path / "t.csv"
        _write_csv(p, [])
        with pytest.raises(EmptyDatasetError):
            load_csv(p, role="train")

    def test_empty_file(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("")
        with pytest.raises(EmptyDatasetError):
            load_csv(p, role="train")

    def test_missing_column_named(self, tmp_path):
        p = tmp_path / "t.csv"
        _write_csv(p, [["p1", "A", "B", 480, "Mon"]],
                   header=[c for c in CSV_HEADER if c != "end_min"])
        with pytest.raises(SchemaError, match="end_min"):
            load_csv(p, role="train")

    def test_unknown_column_named(self, tmp_path):
        p = tmp_path / "t.csv"
        _write_csv(p, [["p1", "A", "B", 480, 510, "Mon", "x"]],
                   header=CSV_HEADER + ["extra"])
        with pytest.raises(SchemaError, match="extra"):
            load_csv(p, role="train")

    def test_bad_time_reports_row_number(self, tmp_path):
        p = tmp_path / "t.csv"
        _write_csv(p, [
            ["p1", "A", "B", 480, 510, "Mon"],
            ["p2", "A", "B", "noon", 510, "Mon"],
        ])
        with pytest.raises(ParseError, match="row 3"):
            load_csv(p, role="train")

    def test_round_trip_save_load(self, tmp_path, world_train):
        p = tmp_path / "t.csv"
        save_csv(world_train, p)
        again = load_csv(p, role="train")
        assert again.records == world_train.records

    def test_paper_scale_row_count(self, tmp_path):
        # large-format fixture: 9,000 passenger ids, 140,725 rows
        p = tmp_path / "big.csv"
        n = 140_725
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for i in range(n):
                w.writerow([f"p{i % 9000:04d}", "ADM", "CEN",
                            400 + i % 900, 430 + i % 900, "Mon"])
        ds = load_csv(p, role="train")
        assert len(ds) == n
        assert len({r.passenger_id for r in ds.records}) == 9000


class TestEncoding:
    def test_vocab_first_appearance(self):
        ds = _ds([_rec(o="A"), _rec(o="B"), _rec(o="A")])
        schema = fit_encoding(ds)
        assert schema.categorical_maps["origin"] == ("A", "B")

    def test_minmax_midpoint(self):
        ds = _ds([_rec(s=60, e=100), _rec(s=1380, e=1400), _rec(s=720, e=800)])
        schema = fit_encoding(ds)
        assert schema.continuous_ranges["start_min"] == (60.0, 1380.0)
        assert schema.normalize("start_min", 720) == pytest.approx(0.5)

    def test_degenerate_range_encodes_half(self):
        ds = _ds([_rec(s=480, e=600), _rec(s=500, e=600)])
        schema = fit_encoding(ds)
        mat = encode(ds, schema)
        col = mat.feature_names.index("end_min")
        assert np.all(mat.rows[:, col] == 0.5)

    def test_identical_record_identical_row(self, world_train, world_schema):
        mat = encode(world_train, world_schema)
        dup = _ds([world_train.records[0]])
        row = encode(dup, world_schema).rows[0]
        assert np.array_equal(row, mat.rows[0])

    def test_oov_zero_block_and_count(self, world_schema):
        ds = _ds([_rec(o="ZZZ", d="CEN", s=480, e=500, day="Mon")], role="synthetic")
        mat = encode(ds, world_schema)
        width = len(world_schema.categorical_maps["origin"])
        start = mat.feature_names.index("origin=ADM")
        assert np.all(mat.rows[0, start:start + width] == 0)
        assert mat.oov_count == 1
        assert mat.oov_by_feature["origin"] == 1

    def test_out_of_range_continuous_unclamped(self):
        train = _ds([_rec(s=100, e=200), _rec(s=200, e=300)])
        schema = fit_encoding(train)
        below = _ds([_rec(s=50, e=250)], role="synthetic")
        mat = encode(below, schema)
        col = mat.feature_names.index("start_min")
        assert mat.rows[0, col] == pytest.approx(-0.5)

    def test_encoding_is_train_anchored(self, world_train, world_holdout):
        schema = fit_encoding(world_train)
        before = (dict(schema.categorical_maps), dict(schema.continuous_ranges))
        encode(world_holdout, schema)
        assert (dict(schema.categorical_maps), dict(schema.continuous_ranges)) == before

    def test_decode_round_trip(self, world_train, world_schema):
        mat = encode(world_train, world_schema)
        back = decode(mat, role="train")
        assert back.records == world_train.records

    def test_decode_rejects_oov_rows(self, world_schema):
        ds = _ds([_rec(o="ZZZ", d="CEN", s=480, e=500, day="Mon")], role="synthetic")
        mat = encode(ds, world_schema)
        with pytest.raises(SchemaError, match="OOV"):
            decode(mat)

    def test_unknown_feature_rejected(self, world_train):
        with pytest.raises(SchemaError):
            fit_encoding(world_train, features=("origin", "fare"))

    def test_empty_dataset_rejected(self):
        ds = TripDataset(records=(), role="train")
        with pytest.raises(EmptyDatasetError):
            fit_encoding(ds)


class TestPartition:
    def test_single_group(self):
        ds = _ds([_rec(day="Mon") for _ in range(10)])
        groups = partition_by_group(ds, "day_of_week")
        assert set(groups) == {"Mon"}
        assert len(groups["Mon"]) == 10

    def test_one_record_per_day(self):
        days = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")
        ds = _ds([_rec(day=d) for d in days])
        groups = partition_by_group(ds, "day_of_week")
        assert len(groups) == 7
        assert all(len(g) == 1 for g in groups.values())

    def test_partition_is_exhaustive_and_disjoint(self, world_train):
        groups = partition_by_group(world_train, "day_of_week")
        assert sum(len(g) for g in groups.values()) == len(world_train)
        from collections import Counter
        seen = Counter(r for g in groups.values() for r in g.records)
        assert seen == Counter(world_train.records)
        for value, g in groups.items():
            assert all(r.day_of_week == value for r in g.records)

    def test_continuous_group_feature_rejected(self, world_train):
        with pytest.raises(SchemaError):
            partition_by_group(world_train, "start_min")
