"""
Unit tests for core/serialize.py
"""

import json
import math

import numpy as np
import pytest

from core.comparison import ComparisonParams, trajectory
from core.errors import UsageError
from core.geodesics import LINE, Route, RouteSegment
from core.line_process import MarkedLine
from core.serialize import (
    TRACE_COLUMNS,
    _clean,
    csv_text,
    dumps,
    load_sample,
    route_to_dict,
    sample_from_dict,
    sample_to_dict,
    table_rows,
    trace_rows,
    write_csv,
    write_json,
)
from tests.conftest import make_sample


class TestClean:
    def test_non_finite_become_none(self):
        assert _clean({"a": math.nan, "b": [1.0, math.inf], "c": (2, -math.inf)}) == {
            "a": None, "b": [1.0, None], "c": [2, None],
        }

    def test_dumps_is_valid_json(self):
        doc = json.loads(dumps({"x": math.nan, "y": 0.1}))
        assert doc == {"x": None, "y": 0.1}


class TestDumps:
    def test_floats_have_seventeen_digits(self):
        text = dumps({"y": 0.1, "z": [1.0, 3]})
        assert '"y": 0.10000000000000001' in text
        assert "1.0,\n" in text

    def test_ints_and_literals_unchanged(self):
        doc = json.loads(dumps({"n": 3, "ok": True, "none": None, "name": "π", "empty": [], "sub": {}}))
        assert doc == {"n": 3, "ok": True, "none": None, "name": "π", "empty": [], "sub": {}}
        assert isinstance(doc["n"], int)

    def test_numpy_scalars(self):
        doc = json.loads(dumps({"a": np.float64(0.5), "b": np.int64(4), "c": np.bool_(False), "d": np.float32(np.inf)}))
        assert doc == {"a": 0.5, "b": 4, "c": False, "d": None}

    def test_bit_exact_round_trip(self):
        values = np.random.default_rng(3).standard_normal(200) * 10.0 ** np.arange(-100, 100)
        back = json.loads(dumps(values.tolist()))
        assert back == values.tolist()

    def test_indented_like_json_module(self):
        obj = {"a": [1, {"b": 2}], "c": "x"}
        assert dumps(obj) == json.dumps(obj, indent=2) + "\n"

    def test_unknown_type_rejected(self):
        with pytest.raises(TypeError):
            dumps({"s": {1, 2}})


class TestSampleDocument:
    def test_round_trip_through_file(self, random_sample, tmp_path):
        path = write_json(tmp_path / "sample.json", sample_to_dict(random_sample))
        back = load_sample(path)
        assert back.lines == random_sample.lines
        assert back.window == random_sample.window
        assert back.v_floor == random_sample.v_floor
        assert back.params == random_sample.params

    def test_segment_extent_kept(self):
        ml = MarkedLine.segment(0, (0.0, 0.0), (0.5, 0.5), 2.0)
        smp = make_sample([ml])
        doc = sample_to_dict(smp)
        assert "extent" in doc["lines"][0]
        assert sample_from_dict(json.loads(dumps(doc))).lines[0].extent == pytest.approx(ml.extent)

    def test_wrong_version_rejected(self, cross_sample):
        doc = sample_to_dict(cross_sample)
        doc["version"] = 99
        with pytest.raises(UsageError):
            sample_from_dict(doc)

    def test_wrong_format_rejected(self, cross_sample):
        doc = sample_to_dict(cross_sample)
        doc["format"] = "something-else"
        with pytest.raises(UsageError):
            sample_from_dict(doc)


class TestRouteDocument:
    def test_fields(self):
        seg = RouteSegment(LINE, 0, (0.0, 0.0), (1.0, 0.0), 2.0, 1.0, 0.5)
        doc = route_to_dict(Route((0.0, 0.0), (1.0, 0.0), (seg,), vertex_path=("t0", "t1")))
        assert doc["total_time"] == 0.5
        assert doc["vertex_path"] == ["t0", "t1"]
        assert doc["segments"][0]["kind"] == LINE
        assert "tie_time" not in doc


class TestCsv:
    def test_floats_use_repr(self):
        text = csv_text(["a", "b"], [(1, 0.1 + 0.2)])
        assert text.splitlines() == ["a,b", "1,0.30000000000000004"]

    def test_write_csv(self, tmp_path):
        path = write_csv(tmp_path / "out" / "t.csv", ["x"], [(1.5,)])
        assert path.read_text(encoding="utf-8") == "x\n1.5\n"

    def test_table_rows_first_seen_order(self):
        header, rows = table_rows([{"a": 1, "b": 2}, {"b": 3, "c": 4}])
        assert header == ["a", "b", "c"]
        assert rows == [(1, 2, ""), ("", 3, 4)]

    def test_trace_rows(self):
        tr = trajectory(ComparisonParams(gamma=3.0), 10, np.random.default_rng(0))
        rows = trace_rows(tr)
        assert len(rows) == 11
        assert len(rows[0]) == len(TRACE_COLUMNS)
        assert rows[0][0] == 0
        assert rows[0][4] == 0.0
