import csv
import io
import json
from dataclasses import dataclass

import numpy as np
import pytest

from conftest import point
from errors import SchemaError
from reporting import CheckResult, VerifyReport, emit_table, normalize_records


def test_single_row_csv():
    text = emit_table([{"family": "koranyi", "value": 0.1, "ok": True}], "csv")
    assert text == "family,value,ok\nkoranyi,0.10000000000000001,true\n"


def test_csv_floats_round_trip():
    value = 2.0 ** 0.25
    text = emit_table([{"value": value}], "csv")
    row = next(csv.DictReader(io.StringIO(text)))
    assert float(row["value"]) == value


def test_empty_tables():
    assert emit_table([], "json") == "[]\n"
    assert emit_table([], "csv", columns=["point", "family", "value"]) == "point,family,value\n"


def test_json_uses_shortest_repr():
    data = json.loads(emit_table([{"value": 1 / 3, "n": np.int64(4)}], "json"))
    assert data == [{"value": 1 / 3, "n": 4}]


def test_mixed_schemas_are_rejected():
    with pytest.raises(SchemaError):
        emit_table([{"a": 1}, {"b": 2}], "json")
    with pytest.raises(SchemaError):
        normalize_records([{"a": 1}], columns=["a", "b"])


def test_unknown_format():
    with pytest.raises(SchemaError):
        emit_table([{"a": 1}], "xml")


def test_dataclass_and_nested_records():
    @dataclass
    class Row:
        name: str
        values: list

    text = emit_table([Row("x", [1, 2])], "csv")
    assert text == 'name,values\nx,"[1,2]"\n'


def test_text_table_is_aligned():
    text = emit_table([{"name": "a", "value": 1.5}, {"name": "long", "value": 2.0}], "text")
    lines = text.splitlines()
    assert lines[0] == "name  value"
    assert lines[2] == "long  2"


def test_check_result_serializes_witness():
    check = CheckResult("box", "norms", "xfail", 2.0, 1e-12, witness=point([[0, 0, 0, 0]], [1, 0, 0]))
    record = check.to_dict()
    assert record["witness"] == "0.0+0.0i+0.0j+0.0k;1.0,0.0,0.0"
    assert record["status"] == "xfail"


def test_check_status_is_validated():
    with pytest.raises(ValueError):
        CheckResult("x", "norms", "skipped")


def test_report_exit_codes():
    report = VerifyReport(seed=0, samples=10)
    report.add(CheckResult("a", "m", "pass"))
    report.add(CheckResult("b", "m", "xfail"))
    report.add(CheckResult("c", "m", "info"))
    assert report.exit_code == 0
    report.add(CheckResult("d", "m", "fail"))
    assert report.exit_code == 1
    assert report.counts() == {"pass": 1, "fail": 1, "xfail": 1, "info": 1}
    assert [c.name for c in report.failed] == ["d"]
    assert "1 fail" in report.summary()
