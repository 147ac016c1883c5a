import csv
import io
import json
from fractions import Fraction

import numpy as np
import pytest

from nullcone.report import CSV_COLUMNS, NormReport, dumps_csv, dumps_json, emit_report, read_json


def sample():
    rep = NormReport("demo", values={"b": np.float64(1 / 3), "a": Fraction(7, 2)},
                     traces={"R_0[beta]": {"coordinate": np.array([-8.0, -4.0]),
                                           "value": np.array([2.0, 1.0])}},
                     slopes={"betab": {"slope": -2.0}}, meta={"n": np.int64(4)})
    rep.add_check("AC0.demo", True, 0.1, 0.2)
    return rep


def test_failing_rules():
    rep = sample()
    rep.add_check("AC0.bad", False)
    assert not rep.passed and rep.failing_rules() == ["AC0.bad"]


def test_json_round_trip(tmp_path):
    rep = sample()
    path = emit_report(rep, tmp_path / "r.json")
    d = read_json(path)
    assert d["values"] == {"a": "7/2", "b": pytest.approx(1 / 3, rel=1e-12)}
    assert d["traces"]["R_0[beta]"]["value"] == [2.0, 1.0]
    assert d["checks"][0]["rule"] == "AC0.demo" and d["passed"]
    again = NormReport(d["run_id"], d["values"], d["traces"], d["slopes"], [], d["meta"])
    assert json.loads(dumps_json(again))["values"] == d["values"]


def test_byte_stable_output(tmp_path):
    a = emit_report(sample(), tmp_path / "a.json").read_bytes()
    b = emit_report(sample(), tmp_path / "b.json").read_bytes()
    assert a == b
    assert dumps_csv(sample()) == dumps_csv(sample())


def test_csv_schema():
    rows = list(csv.reader(io.StringIO(dumps_csv(sample()))))
    assert tuple(rows[0]) == CSV_COLUMNS == ("section", "name", "coordinate", "value")
    assert {r[0] for r in rows[1:]} == {"value", "trace", "slope", "check"}


def test_non_finite_values_serialize():
    rep = NormReport("x", values={"n": float("nan"), "i": float("inf")})
    assert json.loads(dumps_json(rep))["values"] == {"i": "inf", "n": "nan"}


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        emit_report(sample(), tmp_path / "x", fmt="xml")
