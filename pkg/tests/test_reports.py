import json
import math

import pytest
from hypothesis import given, strategies as st

from finslercheck.reports import (CSV_COLUMNS, SCHEMA_VERSION, CheckReport, default_tolerance,
                                  dump_json, emit_reports, load_json_reports, reports_to_csv,
                                  reports_to_json, summarize)


def _rep(lhs=1.0, rhs=2.0, err=0.0, **kw):
    inputs = {"norm_label": "euclidean", "profile_label": "linear", "q": 4.0, "seed": 0}
    return CheckReport.inequality("demo", inputs, lhs, rhs, err, **kw)


def test_empty_json():
    assert reports_to_json([]) == "[]"
    assert emit_reports([], "json") == "[]"


def test_one_passing_report():
    data = json.loads(reports_to_json([_rep()]))
    assert len(data) == 1
    obj = data[0]
    assert obj["pass"] is True and obj["margin"] >= 0
    assert obj["schema_version"] == SCHEMA_VERSION
    for key in ("check_id", "inputs", "inputs_digest", "lhs", "rhs", "tolerance", "constants",
                "notes", "advisory", "error_estimate"):
        assert key in obj


def test_tolerance_rule():
    assert default_tolerance(0.0) == 1e-9
    assert default_tolerance(1e-6) == 3e-6
    assert _rep(1.0 + 2e-6, 1.0, err=1e-6).passed
    assert not _rep(1.0 + 4e-6, 1.0, err=1e-6).passed
    assert not _rep(math.nan, 1.0).passed


def test_out_of_hypothesis_is_not_failure():
    r = CheckReport.out_of_hypothesis("x", {}, "J = 0")
    assert r.passed is None and not r.failed
    assert summarize([r])["out_of_hypothesis"] == 1


def test_advisory_failure_not_counted():
    r = _rep(3.0, 1.0, advisory=True)
    s = summarize([r, _rep()])
    assert s["failed"] == 0 and s["advisory_failed"] == 1 and s["failing_ids"] == []


def test_csv_layout():
    text = reports_to_csv([_rep(), _rep(2.0, 1.0)])
    lines = text.strip().split("\n")
    assert lines[0].split(",") == list(CSV_COLUMNS)
    assert len(lines) == 3
    assert lines[1].split(",")[:4] == ["demo", "euclidean", "linear", "4"]
    assert lines[2].split(",")[8] == "false"


@given(st.floats(allow_nan=False, allow_infinity=False), st.floats(allow_nan=False,
                                                                    allow_infinity=False))
def test_json_round_trip_bit_exact(a, b):
    r = _rep(a, b, err=abs(a) * 1e-3, details={"x": [a, b]})
    back = load_json_reports(reports_to_json([r]))[0]
    assert back["lhs"] == r.lhs and back["rhs"] == r.rhs
    m = back["margin"]
    assert (m == r.margin) or (math.isnan(m) and math.isnan(r.margin))
    assert back["details"]["x"] == [a, b]


def test_non_finite_values():
    text = dump_json({"a": math.inf, "b": math.nan, "c": -math.inf})
    back = load_json_reports(text)
    assert back["a"] == math.inf and math.isnan(back["b"]) and back["c"] == -math.inf


def test_digest_depends_on_inputs_only():
    a = _rep(1.0, 2.0)
    b = _rep(1.5, 3.0)
    assert a.digest == b.digest and len(a.digest) == 64
    c = CheckReport.inequality("demo", {"q": 6.0}, 1.0, 2.0)
    assert c.digest != a.digest


def test_emit_to_file(tmp_path):
    p = tmp_path / "r.csv"
    text = emit_reports([_rep()], "csv", str(p))
    assert p.read_text() == text
    with pytest.raises(ValueError):
        emit_reports([], "xml")


def test_default_campaign_csv_rows(default_reports):
    lines = reports_to_csv(default_reports).strip().split("\n")
    assert len(lines) == len(default_reports) + 1
    back = load_json_reports(reports_to_json(default_reports))
    for obj, r in zip(back, default_reports):
        assert obj["lhs"] == r.lhs or (math.isnan(obj["lhs"]) and math.isnan(r.lhs))
        assert obj["rhs"] == r.rhs or (math.isnan(obj["rhs"]) and math.isnan(r.rhs))
