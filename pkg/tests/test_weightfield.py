"""Tests for counter-based weights, stream seeds and the seed ledger."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from scipy import stats as sps

from invasionlab.core.lattice import Edge, edge_key, edges_in_box
from invasionlab.core.weightfield import (
    MIXER_VERSION,
    Seed,
    WeightField,
    mix64,
    read_seed_ledger,
    stream_seed,
    write_seed_ledger,
)


class TestMixer:
    def test_mix64_stays_in_64_bits(self) -> None:
        for z in (0, 1, 2**63, 2**64 - 1):
            assert 0 <= mix64(z) < 2**64

    def test_mix64_known_first_output(self) -> None:
        # first output of a SplitMix64 generator seeded with 0
        assert mix64(0) == 0xE220A8397B1DCDAF

    def test_stream_seed_validates(self) -> None:
        with pytest.raises(ValueError):
            stream_seed(-1, 0)
        with pytest.raises(ValueError):
            stream_seed(0, -1)
        with pytest.raises(ValueError):
            stream_seed(2**64, 0)

    def test_streams_differ_across_replicas(self) -> None:
        assert len({stream_seed(42, i) for i in range(100)}) == 100


class TestWeightField:
    def test_weight_is_pure(self, field: WeightField) -> None:
        e = Edge.vertical(7, -3)
        assert field.weight(e) == field.weight(e) == WeightField(Seed(12345, 0)).weight(e)

    def test_weights_lie_in_open_unit_interval(self, field: WeightField) -> None:
        ws = [field.weight(e) for e in edges_in_box(5)]
        assert all(0.0 < w < 1.0 for w in ws)

    @pytest.mark.parametrize(("h", "expected"), [(0, 2.0**-53), (2**64 - 1, 1.0 - 2.0**-53)])
    def test_extreme_hashes_stay_inside_unit_interval(self, monkeypatch, h: int, expected: float) -> None:
        monkeypatch.setattr("invasionlab.core.weightfield.mix64", lambda z: h)
        w = WeightField(Seed(1)).weight(Edge.horizontal(0, 0))
        assert w == expected
        assert 0.0 < w < 1.0
        # a 53-bit mantissa would round the top value up to 1.0
        assert ((2**53 - 1) + 0.5) * 2.0**-53 == 1.0

    def test_replicas_see_different_environments(self) -> None:
        a, b = WeightField(Seed(1, 0)), WeightField(Seed(1, 1))
        edges = edges_in_box(3)
        assert [a.weight(e) for e in edges] != [b.weight(e) for e in edges]

    def test_int_seed_means_replica_zero(self) -> None:
        e = Edge.horizontal(0, 0)
        assert WeightField(9).weight(e) == WeightField(Seed(9, 0)).weight(e)

    def test_vectorised_path_matches_scalar(self, field: WeightField) -> None:
        edges = edges_in_box(4)
        keys = np.array([edge_key(e) for e in edges], dtype=np.uint64)
        np.testing.assert_array_equal(field.weights_of_keys(keys), [field.weight(e) for e in edges])

    def test_grids_are_indexed_from_lower_left(self, field: WeightField) -> None:
        h = field.horizontal_grid(-2, -1, 4, 3)
        v = field.vertical_grid(-2, -1, 4, 3)
        assert h.shape == v.shape == (4, 3)
        assert h[1, 2] == field.weight(Edge.horizontal(-1, 1))
        assert v[3, 0] == field.weight(Edge.vertical(1, -1))

    def test_p_open_is_monotone(self, field: WeightField) -> None:
        for e in edges_in_box(3):
            opened = [field.is_p_open(e, p) for p in (0.0, 0.25, 0.5, 0.75, 1.0)]
            assert opened == sorted(opened)
            assert opened[0] is False
            assert opened[-1] is True

    def test_p_outside_unit_interval(self, field: WeightField) -> None:
        with pytest.raises(ValueError):
            field.is_p_open(Edge.horizontal(0, 0), 1.5)

    def test_weights_are_uniform(self, field: WeightField) -> None:
        ws = [field.weight(e) for e in edges_in_box(20)]
        assert sps.kstest(ws, "uniform").pvalue > 0.001


class TestSeedLedger:
    def test_round_trip(self, tmp_path: Path) -> None:
        path = write_seed_ledger(tmp_path / "seeds.tsv", 77, 5)
        header, seeds = read_seed_ledger(path)
        assert MIXER_VERSION in header
        assert "master=77" in header
        assert seeds == {i: stream_seed(77, i) for i in range(5)}
