import json
import math

import jsonschema
import numpy as np
import pytest

from kato_sobolev.report import Case, ReportDoc, to_jsonable, validate_report


def test_pass_requires_measured_within_bound():
    with pytest.raises(AssertionError):
        Case("x", "pass", 2.0, 1.0)
    assert Case("x", "pass", 1.0, 1.0).passed
    assert Case("x", "pass", 5.0, None).passed


def test_nonfinite_measurement_fails():
    c = Case("x", "pass", math.nan, 1.0)
    assert c.status == "fail" and c.measured is None


def test_unknown_status_rejected():
    with pytest.raises(ValueError):
        Case("x", "ok", 1.0)


def test_to_jsonable_converts_numpy():
    out = to_jsonable({"a": np.float64(1.5), "b": np.arange(3), "c": np.inf, "d": 1 + 2j})
    assert out == {"a": 1.5, "b": [0, 1, 2], "c": None, "d": [1.0, 2.0]}


def test_report_sorted_and_valid():
    doc = ReportDoc("s", {"k": 1}, [Case("b", "pass", 0.0, 1.0), Case("a", "fail", 2.0, 1.0)], {"seed": 1})
    text = doc.to_json()
    parsed = json.loads(text)
    assert [c["name"] for c in parsed["cases"]] == ["a", "b"]
    assert text == json.dumps(parsed, sort_keys=True, indent=2) + "\n"
    validate_report(parsed)
    assert not doc.all_pass


def test_schema_rejects_bad_documents():
    with pytest.raises(jsonschema.ValidationError):
        validate_report({"suite": "s", "params": {}, "meta": {}, "cases": [{"name": "a", "status": "maybe"}]})
