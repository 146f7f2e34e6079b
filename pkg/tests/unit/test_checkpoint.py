"""
Unit tests for core/checkpoint.py
"""

import json

import pytest

from core.checkpoint import _fresh, checkpoint_path, delete, is_complete, load, save, write_text_atomic
from core.errors import OutputError


class TestWriteTextAtomic:
    def test_creates_parents(self, tmp_path):
        path = write_text_atomic(tmp_path / "a" / "b" / "out.csv", "x\n1\n")
        assert path.read_text(encoding="utf-8") == "x\n1\n"

    def test_overwrites(self, tmp_path):
        path = tmp_path / "out.txt"
        write_text_atomic(path, "old")
        write_text_atomic(path, "new")
        assert path.read_text(encoding="utf-8") == "new"

    def test_no_tmp_file_left_behind(self, tmp_path):
        write_text_atomic(tmp_path / "out.json", "{}")
        assert [p.name for p in tmp_path.iterdir()] == ["out.json"]

    def test_failure_names_path(self, tmp_path):
        blocker = tmp_path / "file.txt"
        blocker.write_text("not a directory")
        with pytest.raises(OutputError, match="file.txt"):
            write_text_atomic(blocker / "out.json", "{}")

    def test_output_error_exit_code(self, tmp_path):
        blocker = tmp_path / "file.txt"
        blocker.write_text("")
        with pytest.raises(OutputError) as info:
            write_text_atomic(blocker / "out.json", "{}")
        assert info.value.exit_code == 4


class TestFresh:
    def test_default_keys(self):
        assert _fresh() == {"completed": [], "results": {}, "parameters": None}


class TestCheckpointPath:
    def test_named_after_experiment(self, tmp_path):
        path = checkpoint_path(tmp_path, "fibre-sweep")
        assert path.name == "fibre-sweep_checkpoint.json"
        assert path.parent == tmp_path


class TestLoad:
    def test_returns_fresh_when_file_missing(self, tmp_path):
        assert load(tmp_path / "nonexistent.json") == _fresh()

    def test_returns_fresh_on_corrupt_json(self, tmp_path):
        path = tmp_path / "corrupt.json"
        path.write_text("not valid json {{{")
        assert load(path) == _fresh()

    def test_result_keys_become_ints(self, tmp_path):
        path = tmp_path / "ckpt.json"
        path.write_text(json.dumps({"completed": ["2", 0], "results": {"0": {"t": 1.5}, "2": {"t": 0.5}}}))
        data = load(str(path))
        assert data["completed"] == [0, 2]
        assert data["results"] == {0: {"t": 1.5}, 2: {"t": 0.5}}
        assert data["parameters"] is None


class TestSave:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "sub" / "ckpt.json"
        save(path, {"completed": [1, 0], "results": {1: {"x": 0.1}, 0: {"x": 0.2}}, "parameters": {"n": 2}})
        data = load(path)
        assert data["completed"] == [0, 1]
        assert data["results"][1] == {"x": 0.1}
        assert data["parameters"] == {"n": 2}

    def test_timestamp_added(self, tmp_path):
        path = tmp_path / "ckpt.json"
        save(path, _fresh())
        assert "_saved_at" in json.loads(path.read_text())


class TestIsComplete:
    def test_true_when_all_done(self, tmp_path):
        path = tmp_path / "ckpt.json"
        save(path, {"completed": [0, 1, 2], "results": {}})
        assert is_complete(path, total=3) is True

    def test_false_when_partial(self, tmp_path):
        path = tmp_path / "ckpt.json"
        save(path, {"completed": [0], "results": {}})
        assert is_complete(path, total=3) is False

    def test_false_when_file_missing(self, tmp_path):
        assert is_complete(tmp_path / "missing.json", total=10) is False


class TestDelete:
    def test_deletes_existing_file(self, tmp_path):
        path = tmp_path / "ckpt.json"
        save(path, _fresh())
        delete(path)
        assert not path.exists()

    def test_no_error_when_file_missing(self, tmp_path):
        delete(tmp_path / "ghost.json")
