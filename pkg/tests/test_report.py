import csv
import json

import pytest

from framelap.report import (
    SCHEMA_VERSION,
    InMemoryRowStore,
    Row,
    build_report,
    load_report,
    save_csv,
    save_json,
    summarize,
)


@pytest.fixture
def store():
    store = InMemoryRowStore()
    store.add_row(Row(index=1, point=[0.5, 1.0], frame="coordinate", residuals={"lemma": 3e-9}))
    store.add_row(Row(index=0, point=[0.0, 1.0], frame="coordinate", residuals={"lemma": 1e-9}, terms={"d": 0.2}))
    store.add_row(
        Row(index=2, point=[0.5, 1.0], frame="tilted", quantities={"kappa": 0.28}, residuals={"lemma": 2e-6})
    )
    return store


# Row Store Tests
def test_rows_are_grouped_by_frame_and_ordered(store):
    assert [row.index for row in store.get_rows()] == [0, 1, 2]
    assert [row.index for row in store.get_rows("tilted")] == [2]
    assert store.get_rows("normal-tube") == []
    assert store.get_frames() == ["coordinate", "tilted"]
    assert len(store) == 3


def test_rows_without_frame_are_not_listed_as_frames():
    store = InMemoryRowStore()
    store.add_row(Row(index=0, point=[0.0, 0.0]))
    assert store.get_frames() == []
    assert len(store.get_rows()) == 1


def test_residuals_by_identity(store):
    assert store.get_residuals("lemma") == [1e-9, 3e-9, 2e-6]
    assert store.get_residuals("missing") == []


# Summary Tests
def test_summary_statistics(store):
    (entry,) = summarize(store, {"lemma": 1e-5})
    assert entry.identity == "lemma"
    assert entry.count == 3
    assert entry.max == pytest.approx(2e-6)
    assert entry.mean == pytest.approx((1e-9 + 3e-9 + 2e-6) / 3)
    assert entry.passed


def test_summary_fails_over_budget(store):
    (entry,) = summarize(store, {"lemma": 1e-7})
    assert not entry.passed


def test_unbudgeted_identity_passes(store):
    (entry,) = summarize(store, {})
    assert entry.budget is None
    assert entry.passed


def test_report_collects_failures(store):
    report = build_report("verify", store, {"lemma": 1e-7}, "abc", "0.1.0", seed=4, orientations={"tilted": [1, 1]})
    assert not report.passed
    assert [entry.identity for entry in report.failures()] == ["lemma"]
    assert report.entry("lemma").max == pytest.approx(2e-6)
    with pytest.raises(KeyError):
        report.entry("curl")
    assert report.provenance.frames == ["coordinate", "tilted"]
    assert report.provenance.orientations == {"tilted": [1]}
    assert report.provenance.seed == 4


def test_report_frames_can_be_given(store):
    report = build_report("compare-frames", store, {}, "abc", "0.1.0", frames=["tilted", "coordinate"])
    assert report.provenance.frames == ["tilted", "coordinate"]
    assert report.passed


# Output Tests
def test_json_round_trip(store, tmp_path):
    report = build_report("verify", store, {"lemma": 1e-5}, "abc", "0.1.0")
    path = tmp_path / "out" / "report.json"
    save_json(report, str(path))
    raw = json.loads(path.read_text())
    assert raw["schema"] == SCHEMA_VERSION
    assert raw["provenance"]["config_sha256"] == "abc"
    loaded = load_report(str(path))
    assert loaded == report


def test_csv_has_prefixed_columns(store, tmp_path):
    report = build_report("verify", store, {}, "abc", "0.1.0")
    path = tmp_path / "rows.csv"
    save_csv(report, str(path))
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        records = list(reader)
    assert reader.fieldnames == ["index", "frame", "z1", "z2", "quantity:kappa", "residual:lemma", "term:d"]
    assert len(records) == 3
    assert records[0]["term:d"] == "0.2"
    assert records[0]["quantity:kappa"] == ""
    assert records[2]["frame"] == "tilted"
