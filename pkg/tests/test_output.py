"""Tests for the result table writers."""

import csv
import io
import json

import numpy as np

from cqt.runner.output import format_value, write_csv, write_json, write_rows


class TestFormatValue:
    def test_floats_reparse_exactly(self):
        for value in (0.1, 1 / 3, -31500.000000000004, 6.02e23, 5e-324):
            assert float(format_value(value)) == value

    def test_other_types(self):
        assert format_value(None) == ""
        assert format_value(True) == "true"
        assert format_value(False) == "false"
        assert format_value(7) == "7"
        assert format_value("n_H") == "n_H"

    def test_numpy_float(self):
        assert float(format_value(np.float64(0.1))) == 0.1


class TestWriters:
    ROWS = [
        {"model": "composite", "J": -31500.0, "error": None},
        {"model": "semiclassical", "J": None, "error": "ConvergenceError: residual"},
    ]
    COLUMNS = ["model", "J", "error"]

    def test_csv(self):
        buf = io.StringIO()
        write_csv(self.ROWS, self.COLUMNS, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "model,J,error"
        assert lines[1] == "composite,-31500,"
        parsed = list(csv.DictReader(io.StringIO(buf.getvalue())))
        assert parsed[1]["error"] == "ConvergenceError: residual"

    def test_csv_empty_table(self):
        buf = io.StringIO()
        write_csv([], self.COLUMNS, buf)
        assert buf.getvalue() == "model,J,error\n"

    def test_csv_keeps_full_precision(self):
        buf = io.StringIO()
        write_csv([{"model": "composite", "J": 1 / 3, "error": None}], self.COLUMNS, buf)
        row = next(csv.DictReader(io.StringIO(buf.getvalue())))
        assert float(row["J"]) == 1 / 3
        assert row["error"] == ""

    def test_json(self):
        buf = io.StringIO()
        write_json([{"a": 1 + 2j, "b": np.float64(0.5)}], ["a", "b"], buf)
        assert json.loads(buf.getvalue()) == [{"a": [1.0, 2.0], "b": 0.5}]

    def test_write_rows_creates_directory(self, tmp_path):
        target = tmp_path / "nested" / "out.csv"
        write_rows(self.ROWS, self.COLUMNS, target)
        assert target.read_text().startswith("model,J,error\n")

    def test_write_rows_json(self, tmp_path):
        target = tmp_path / "out.json"
        write_rows(self.ROWS, self.COLUMNS, target, "json")
        assert json.loads(target.read_text())[0]["model"] == "composite"

    def test_stdout(self, capsys):
        write_rows(self.ROWS, self.COLUMNS, "-")
        assert capsys.readouterr().out.startswith("model,J,error\n")
