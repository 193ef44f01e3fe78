"""Tests for headed output files and the replica pool."""

from __future__ import annotations

from functools import partial
from pathlib import Path

import pytest

from invasionlab import __version__
from invasionlab.core.weightfield import MIXER_VERSION
from invasionlab.utils.output import append_jsonl, provenance, read_csv, read_jsonl, start_jsonl, write_csv
from invasionlab.utils.pool import replica_map


def _scaled(factor: int, value: int) -> int:
    return factor * value


class TestProvenance:
    def test_fields(self) -> None:
        header = provenance("abc", 42, replicas=3)
        assert header == {
            "tool_version": __version__,
            "config_hash": "abc",
            "master_seed": 42,
            "mixer": MIXER_VERSION,
            "replicas": 3,
        }


class TestCsv:
    def test_header_and_rows(self, tmp_path: Path) -> None:
        path = write_csv(tmp_path / "sub" / "t.csv", provenance("h", 1), ("k", "v"), [(1, "0.5"), (2, "0.25")])
        header, rows = read_csv(path)
        assert header["config_hash"] == "h"
        assert header["master_seed"] == "1"
        assert rows == [{"k": "1", "v": "0.5"}, {"k": "2", "v": "0.25"}]


class TestJsonl:
    def test_torn_last_line_is_dropped(self, tmp_path: Path) -> None:
        path = start_jsonl(tmp_path / "r.jsonl", {"config_hash": "h"})
        append_jsonl(path, {"replica": 0})
        with path.open("a", encoding="utf-8") as fh:
            fh.write('{"replica": 1')
        header, records = read_jsonl(path)
        assert header == {"config_hash": "h"}
        assert records == [{"replica": 0}]

    def test_corruption_before_the_end_is_an_error(self, tmp_path: Path) -> None:
        path = start_jsonl(tmp_path / "r.jsonl", {})
        with path.open("a", encoding="utf-8") as fh:
            fh.write("{broken\n")
        append_jsonl(path, {"replica": 0})
        with pytest.raises(ValueError):
            read_jsonl(path)


class TestReplicaMap:
    def test_serial(self) -> None:
        assert list(replica_map(partial(_scaled, 3), range(5))) == [0, 3, 6, 9, 12]

    def test_pool_keeps_submission_order(self) -> None:
        assert list(replica_map(partial(_scaled, 2), range(8), threads=2)) == [2 * i for i in range(8)]
