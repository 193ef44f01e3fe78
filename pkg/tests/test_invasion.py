"""Tests for the invasion engine, truncated runs, replay checks and trace dumps."""

from __future__ import annotations

import dataclasses
import heapq
from pathlib import Path

import pytest

from invasionlab.core.errors import ResourceLimitError
from invasionlab.core.invasion import (
    InvasionConfig,
    StopReason,
    dump_trace,
    invade,
    is_prefix,
    load_trace_entries,
    outer_boundary,
    trace_radius,
    truncated_invasion,
    verify_greedy,
)
from invasionlab.core.lattice import ORIGIN, Edge, chebyshev, edge_key, incident_edges
from invasionlab.core.weightfield import MIXER_VERSION, Seed, WeightField
from tests.conftest import TableField


def _reference_invasion(field: WeightField, stop_radius: int, seed_radius: int = 0) -> list[int]:
    """Plain heap-and-set invasion over value types."""
    r = seed_radius
    sites = {(x, y) for x in range(-r, r + 1) for y in range(-r, r + 1)}
    heap: list[tuple[float, int, Edge]] = []

    def push_frontier(s: tuple[int, int]) -> None:
        for e in incident_edges(s):
            if e.a not in sites or e.b not in sites:
                heapq.heappush(heap, (field.weight(e), edge_key(e), e))

    for s in sorted(sites):
        if chebyshev(s) == r:
            push_frontier(s)
    out: list[int] = []
    while True:
        _, key, e = heapq.heappop(heap)
        out.append(key)
        new = e.a if e.a not in sites else e.b if e.b not in sites else None
        if new is None:
            continue
        sites.add(new)
        if chebyshev(new) >= stop_radius:
            return out
        push_frontier(new)


class TestInvasionConfig:
    def test_needs_a_stop_rule(self, field: WeightField) -> None:
        with pytest.raises(ValueError):
            InvasionConfig(field=field)

    @pytest.mark.parametrize("kwargs", [{"stop_radius": 0}, {"stop_steps": 0}, {"stop_steps": 5, "seed_radius": -1}])
    def test_rejects_bad_values(self, field: WeightField, kwargs: dict) -> None:
        with pytest.raises(ValueError):
            InvasionConfig(field=field, **kwargs)

    def test_echo_carries_seed(self) -> None:
        cfg = InvasionConfig(field=WeightField(Seed(4, 2)), stop_steps=3)
        assert cfg.echo()["master_seed"] == 4
        assert cfg.echo()["replica"] == 2


class TestInvade:
    def test_step_budget(self, field: WeightField) -> None:
        trace = invade(InvasionConfig(field=field, stop_steps=50))
        assert len(trace) == 50
        assert trace.stop_reason is StopReason.STEPS_EXHAUSTED

    def test_radius_stop(self, field: WeightField) -> None:
        trace = invade(InvasionConfig(field=field, stop_radius=8))
        assert trace.stop_reason is StopReason.RADIUS_HIT
        assert trace_radius(trace) == 8
        assert max(chebyshev(s) for s in trace.sites()) == 8

    def test_deterministic(self) -> None:
        a = invade(InvasionConfig(field=WeightField(Seed(3, 1)), stop_radius=6))
        b = invade(InvasionConfig(field=WeightField(Seed(3, 1)), stop_radius=6))
        assert a.keys.tolist() == b.keys.tolist()
        assert a.weights.tolist() == b.weights.tolist()

    def test_recorded_weights_match_field(self, field: WeightField) -> None:
        trace = invade(InvasionConfig(field=field, stop_steps=40))
        assert all(w == field.weight(e) for _, e, w in trace.iter_entries())

    def test_no_edge_is_invaded_twice(self, field: WeightField) -> None:
        trace = invade(InvasionConfig(field=field, stop_radius=10))
        assert len(set(trace.keys.tolist())) == len(trace)

    def test_first_step_is_lightest_origin_edge(self, field: WeightField) -> None:
        trace = invade(InvasionConfig(field=field, stop_steps=1))
        lightest = min(incident_edges(ORIGIN), key=field.weight)
        assert trace.entry(1).edge == lightest

    def test_greedy_replay_passes(self, field: WeightField) -> None:
        trace = invade(InvasionConfig(field=field, stop_radius=12))
        assert verify_greedy(trace) == []

    def test_shorter_run_is_prefix(self, field: WeightField) -> None:
        short = invade(InvasionConfig(field=field, stop_steps=30))
        long = invade(InvasionConfig(field=field, stop_steps=120))
        assert is_prefix(short, long)
        assert not is_prefix(long, short)

    def test_follows_a_light_corridor(self) -> None:
        corridor = {Edge.horizontal(0, 0): 0.1, Edge.horizontal(1, 0): 0.2, Edge.horizontal(2, 0): 0.3}
        trace = invade(InvasionConfig(field=TableField(corridor), stop_radius=3))
        assert trace.edges() == list(corridor)
        assert trace.stop_reason is StopReason.RADIUS_HIT

    def test_cycle_edges_are_invaded(self) -> None:
        square = {
            Edge.horizontal(0, 0): 0.1,
            Edge.vertical(0, 0): 0.2,
            Edge.vertical(1, 0): 0.3,
            Edge.horizontal(0, 1): 0.4,
        }
        trace = invade(InvasionConfig(field=TableField(square), stop_steps=4))
        assert trace.edges() == list(square)
        assert len(trace.sites()) == 4

    @pytest.mark.parametrize(("seed", "seed_radius"), [(1, 0), (2, 0), (3, 2)])
    def test_matches_reference_invasion(self, seed: int, seed_radius: int) -> None:
        field = WeightField(Seed(seed, 0))
        trace = invade(InvasionConfig(field=field, seed_radius=seed_radius or None, stop_radius=20))
        assert trace.keys.tolist() == _reference_invasion(field, 20, seed_radius)

    def test_window_growth_matches_capped_window(self) -> None:
        field = WeightField(Seed(8, 1))
        capped = invade(InvasionConfig(field=field, stop_radius=150))
        grown = invade(InvasionConfig(field=field, stop_steps=len(capped)))
        assert grown.keys.tolist() == capped.keys.tolist()
        assert grown.weights.tolist() == capped.weights.tolist()
        assert verify_greedy(grown) == []

    def test_invaded_sets_include_seed_box(self, field: WeightField) -> None:
        trace = invade(InvasionConfig(field=field, seed_radius=1, stop_steps=30))
        assert len(trace.invaded_edges) == len(trace) + 12
        assert {(x, y) for x in (-1, 0, 1) for y in (-1, 0, 1)} <= trace.sites()
        assert len(trace.sites()) == len(trace.invaded_sites)

    def test_hard_cap(self, field: WeightField) -> None:
        with pytest.raises(ResourceLimitError) as info:
            invade(InvasionConfig(field=field, stop_steps=100, hard_cap=10))
        assert info.value.cap == 10
        assert info.value.invaded == 11


class TestSeedRegion:
    def test_starts_outside_seed_box(self, field: WeightField) -> None:
        trace = invade(InvasionConfig(field=field, seed_radius=2, stop_steps=20))
        first = trace.entry(1).edge
        assert {chebyshev(first.a), chebyshev(first.b)} == {2, 3}
        assert all(e.max_norm >= 3 for e in trace.edges())
        assert verify_greedy(trace) == []

    def test_seed_reaching_stop_radius_gives_empty_trace(self, field: WeightField) -> None:
        trace = invade(InvasionConfig(field=field, seed_radius=4, stop_radius=4))
        assert len(trace) == 0
        assert trace.stop_reason is StopReason.RADIUS_HIT
        assert trace_radius(trace) == 4

    def test_outer_boundary_of_origin(self) -> None:
        assert outer_boundary({ORIGIN}, set()) == set(incident_edges(ORIGIN))

    def test_outer_boundary_needs_a_site(self) -> None:
        with pytest.raises(ValueError):
            outer_boundary(set(), set())


class TestTruncatedInvasion:
    def test_seed_box_and_stop_radius(self, field: WeightField) -> None:
        trace = truncated_invasion(field, k=2, l=1, m=1)
        assert trace.config.seed_radius == 2
        assert trace.config.stop_radius == 16
        assert trace_radius(trace) == 16

    def test_small_k_starts_from_origin(self, field: WeightField) -> None:
        trace = truncated_invasion(field, k=0, l=1, m=1)
        assert trace.config.seed_radius is None
        assert trace.config.stop_radius == 4

    @pytest.mark.parametrize(("k", "l", "m"), [(-1, 1, 1), (2, 0, 1), (2, 1, 0)])
    def test_rejects_bad_shape(self, field: WeightField, k: int, l: int, m: int) -> None:
        with pytest.raises(ValueError):
            truncated_invasion(field, k, l, m)


class TestReplayCheck:
    def test_detects_reordered_steps(self, field: WeightField) -> None:
        trace = invade(InvasionConfig(field=field, stop_steps=60))
        tampered = dataclasses.replace(trace, keys=trace.keys[::-1].copy(), weights=trace.weights[::-1].copy())
        assert verify_greedy(tampered)

    def test_empty_trace_passes(self, field: WeightField) -> None:
        trace = invade(InvasionConfig(field=field, seed_radius=3, stop_radius=2))
        assert verify_greedy(trace) == []


class TestTraceDump:
    def test_round_trip(self, field: WeightField, tmp_path: Path) -> None:
        trace = invade(InvasionConfig(field=field, stop_radius=5))
        path = dump_trace(trace, tmp_path / "nested" / "trace.jsonl", ledger="abc", config_hash="h1")
        header, entries = load_trace_entries(path)
        assert header["mixer"] == MIXER_VERSION
        assert header["master_seed"] == 12345
        assert header["stop_reason"] == "radius_hit"
        assert header["config_hash"] == "h1"
        assert header["seed_region"] == "origin"
        assert entries == trace.entries
