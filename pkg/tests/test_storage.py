"""Tests for report storage and document/table I/O."""

import io
import json

import numpy as np
import pytest

from helicalcr.models import SuiteResult, VerificationReport
from helicalcr.storage import (
    dump_document,
    format_number,
    read_document,
    read_samples_csv,
    write_csv,
    write_document,
    write_table,
)


def report(**kwargs):
    return VerificationReport(suites=[SuiteResult(name="spectra", passed=True, cases=3)], **kwargs)


class TestReportStorage:
    def test_create_generates_id(self, report_storage):
        created = report_storage.create(report())
        assert created.id is not None
        assert len(created.id) > 0

    def test_create_preserves_given_id(self, report_storage):
        created = report_storage.create(report(id="custom-id"))
        assert created.id == "custom-id"

    def test_duplicate_id_raises(self, report_storage):
        report_storage.create(report(id="same"))
        with pytest.raises(ValueError, match="already exists"):
            report_storage.create(report(id="same"))

    def test_get_by_id(self, report_storage):
        created = report_storage.create(report(seed=7))
        fetched = report_storage.get_by_id(created.id)
        assert fetched is not None
        assert fetched.seed == 7
        assert fetched.suites[0].cases == 3
        assert fetched.passed is True

    def test_get_nonexistent(self, report_storage):
        assert report_storage.get_by_id("missing") is None

    def test_get_all_in_insertion_order(self, report_storage):
        report_storage.create(report(seed=1))
        report_storage.create(report(seed=2))
        assert [r.seed for r in report_storage.get_all()] == [1, 2]

    def test_delete(self, report_storage):
        created = report_storage.create(report())
        assert report_storage.delete(created.id) is True
        assert report_storage.get_by_id(created.id) is None

    def test_delete_nonexistent(self, report_storage):
        assert report_storage.delete("nobody") is False

    def test_empty_file_returns_empty_list(self, report_storage):
        assert report_storage.get_all() == []

    def test_file_is_plain_json(self, report_storage):
        report_storage.create(report(id="r1"))
        with open(report_storage.file_path) as f:
            data = json.load(f)
        assert data["reports"][0]["id"] == "r1"
        assert data["reports"][0]["passed"] is True


class TestDocuments:
    def test_dump_is_sorted_with_newline(self):
        text = dump_document({"b": 1, "a": [1.5]})
        assert text.endswith("\n")
        assert text.index('"a"') < text.index('"b"')

    def test_write_and_read(self, tmp_path):
        path = tmp_path / "nested" / "doc.json"
        write_document(path, {"x": [1.0, 2.0]})
        assert read_document(path) == {"x": [1.0, 2.0]}


class TestTables:
    def test_format_keeps_full_precision(self):
        assert float(format_number(np.pi)) == np.pi
        assert format_number(0.1) == "0.10000000000000001"

    def test_write_table(self):
        stream = io.StringIO()
        write_table(stream, ["s", "x"], np.array([[0.0, 1.0], [0.5, -2.0]]))
        assert stream.getvalue().splitlines() == ["s,x", "0,1", "0.5,-2"]

    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "samples.csv"
        rows = np.array([[0.0, 1.0, 0.0], [0.25, np.cos(0.25), np.sin(0.25)]])
        write_csv(path, ["s", "x1", "x2"], rows)
        samples = read_samples_csv(path)
        assert len(samples) == 2
        assert samples[1][0] == 0.25
        assert np.array_equal(samples[1][1], rows[1, 1:])

    def test_read_without_header(self, tmp_path):
        path = tmp_path / "bare.csv"
        path.write_text("0,1,2\n1,3,4\n")
        samples = read_samples_csv(path)
        assert [s for s, _ in samples] == [0.0, 1.0]

    def test_non_numeric_body_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("s,x\n0,1\nfoo,2\n")
        with pytest.raises(ValueError):
            read_samples_csv(path)
