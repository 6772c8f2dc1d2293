import io
import json

import numpy as np
import pytest

from cdmloc import ConfigurationError, Fingerprint, RowError, SchemaError
from cdmloc.dataset_io import (
    BUILTIN_MANIFESTS,
    DatasetManifest,
    Record,
    clean_records,
    dedup_replicas,
    export_dataset,
    load_dataset,
    load_manifest,
    remove_invalid,
    split_count,
    train_validation_split,
)
from cdmloc.fingerprint import GeoLabel
from synthetic import path_loss_samples, write_uji_like_csv

SMALL = DatasetManifest(attribute_columns=("ap1", "ap2", "ap3"), coord_x_column="x",
                        coord_y_column="y", sentinel=100, user_column="user",
                        device_column="dev", timestamp_column="t")


def small_csv(rows):
    text = "ap1,ap2,ap3,x,y,user,dev,t\n" + "\n".join(",".join(map(str, r)) for r in rows) + "\n"
    return io.StringIO(text)


def test_load_strips_sentinel():
    ds = load_dataset(small_csv([[-50, 100, -70, 1, 2, "u", "d", 0],
                                 [100, 100, 100, 1, 2, "u", "d", 10]]), SMALL)
    assert ds.records[0].fingerprint == Fingerprint({"ap1": -50, "ap3": -70})
    assert len(ds.records[1].fingerprint) == 0
    assert ds.records[0].label == GeoLabel(1, 2)
    assert ds.records[1].user == "u" and ds.records[1].timestamp == 10


def test_load_errors():
    with pytest.raises(SchemaError, match="ap3"):
        load_dataset(io.StringIO("ap1,ap2,x,y,user,dev,t\n"), SMALL)
    with pytest.raises(RowError) as exc:
        load_dataset(small_csv([[-50, 100, -70, 1, 2, "u", "d", 0], [-50, "oops", -70, 1, 2, "u", "d", 0]]),
                     SMALL)
    assert exc.value.row_index == 1
    with pytest.raises(SchemaError):
        load_dataset(io.StringIO(""), SMALL)


def test_manifest_prefix_and_files(tmp_path):
    m = DatasetManifest(attribute_prefix="ap", coord_x_column="x", coord_y_column="y", sentinel=100)
    ds = load_dataset(small_csv([[-50, 100, -70, 1, 2, "u", "d", 0]]), m)
    assert ds.manifest.attribute_columns == ("ap1", "ap2", "ap3")
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"attribute_prefix": "ap", "coord_x_column": "x",
                                "coord_y_column": "y", "sentinel": -110}))
    assert load_manifest(path).sentinel == -110
    ypath = tmp_path / "m.yaml"
    ypath.write_text("attribute_columns: [ap1, ap2]\ncoord_x_column: x\ncoord_y_column: y\nsentinel: 100\n")
    assert load_manifest(ypath).attribute_columns == ("ap1", "ap2")
    assert load_manifest("UJIIndoorLoc") is BUILTIN_MANIFESTS["ujiindoorloc"]
    with pytest.raises(ConfigurationError):
        load_manifest(tmp_path / "missing.json")
    with pytest.raises(ConfigurationError):
        DatasetManifest.from_dict({"coord_x_column": "x", "coord_y_column": "y", "sentinel": 1,
                                   "attribute_prefix": "a", "colour": "red"})
    with pytest.raises(ConfigurationError):
        DatasetManifest(attribute_columns=("x",), coord_x_column="x", coord_y_column="y", sentinel=1)


def test_builtin_manifest_sizes():
    assert len(BUILTIN_MANIFESTS["ujiindoorloc"].attribute_columns) == 520
    assert BUILTIN_MANIFESTS["ujiindoorloc"].sentinel == 100
    assert BUILTIN_MANIFESTS["hil"].sentinel == -110


def rec(fp, x=0.0, user="1", dev="1", t=0.0):
    return Record(Fingerprint(fp), GeoLabel(x, 0.0, 0, 0), user, dev, t)


def test_remove_invalid():
    recs = [rec({"a": -50}), rec({}), rec({"b": -60}), rec({}), rec({"c": -1})]
    kept, frag = remove_invalid(recs)
    assert len(kept) == 3 and frag == {"n_input": 5, "n_invalid_removed": 2, "n_after_invalid": 3}
    assert remove_invalid(kept)[0] == kept


def test_dedup_groups_and_determinism():
    recs = [rec({"a": -50}, x=0, t=0), rec({"a": -51}, x=0, t=100), rec({"a": -52}, x=0, t=350),
            rec({"a": -53}, x=0, t=2000),  # too late: own group
            rec({"a": -54}, x=1, t=10),  # other location
            rec({"a": -55}, x=0, user="2", t=20)]  # other user
    kept, frag = dedup_replicas(recs, 300, seed=4)
    assert frag["n_replica_groups"] == 1 and frag["n_unique_kept"] == 4
    assert kept[1:] == recs[3:]
    assert kept[0] in recs[:3]
    again, _ = dedup_replicas(recs, 300, seed=4)
    assert again == kept
    assert dedup_replicas(kept, 300, seed=4)[0] == kept
    distinct = [rec({"a": -50}, x=i) for i in range(5)]
    assert dedup_replicas(distinct)[0] == distinct


def test_dedup_needs_metadata():
    with pytest.raises(ConfigurationError):
        dedup_replicas([Record(Fingerprint({"a": 1}), GeoLabel(0, 0))])


def test_clean_report_invariants():
    recs = [rec({}), rec({"a": -50}, t=0), rec({"a": -50}, t=5), rec({"a": -50}, x=3)]
    kept, report = clean_records(recs, seed=1)
    assert (report.n_input, report.n_invalid_removed, report.n_after_invalid) == (4, 1, 3)
    assert report.n_after_invalid == report.n_input - report.n_invalid_removed
    assert report.n_unique_kept == len(kept) == 2 <= report.n_after_invalid


def test_split():
    assert split_count(670, 0.75) == 503
    assert split_count(4, 0.75) == 3
    recs = [rec({"a": -i - 1}, x=i) for i in range(10)]
    train, val = train_validation_split(recs, 0.75, seed=2)
    assert len(train) == 8 and len(val) == 2
    assert sorted(r.label.x for r in train + val) == list(range(10))
    assert train_validation_split(recs, 0.75, seed=2) == (train, val)
    with pytest.raises(ConfigurationError):
        train_validation_split(recs, 1.0)


def test_export_round_trip(tmp_path):
    rss, xy, b, f = path_loss_samples(30, seed=1, n_ap=12, buildings=2, floors=2)
    src = tmp_path / "src.csv"
    write_uji_like_csv(src, rss, xy, b, f)
    m = DatasetManifest(**{**BUILTIN_MANIFESTS["ujiindoorloc"].to_dict(),
                           "attribute_columns": (), "attribute_prefix": "WAP"})
    ds = load_dataset(src, m)
    out = tmp_path / "out.csv"
    export_dataset(out, ds)
    assert out.read_bytes() == src.read_bytes()
    again = load_dataset(out, m)
    assert [r.fingerprint for r in again.records] == [r.fingerprint for r in ds.records]
    assert [r.label for r in again.records] == [r.label for r in ds.records]
    # records built in memory (no raw cells) are rendered from their fields
    bare = ds.with_records([Record(r.fingerprint, r.label, r.user, r.device, r.timestamp)
                            for r in ds.records])
    export_dataset(tmp_path / "bare.csv", bare)
    third = load_dataset(tmp_path / "bare.csv", m)
    assert [r.fingerprint for r in third.records] == [r.fingerprint for r in ds.records]
    assert [r.label for r in third.records] == [r.label for r in ds.records]
    assert np.isnan(rss).any()
