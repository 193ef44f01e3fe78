"""Tests for lattice geometry, edge keys and the edge text codec."""

from __future__ import annotations

import pytest

from invasionlab.core.lattice import (
    Annulus,
    Box,
    DualEdge,
    Edge,
    Orientation,
    Site,
    annulus_index,
    chebyshev,
    decode_edge,
    dual,
    dual_to_primal,
    edge_from_key,
    edge_in_region,
    edge_key,
    edges_in_box,
    encode_edge,
    incident_edges,
    site_from_key,
    site_key,
)


class TestEdge:
    def test_between_canonicalises(self) -> None:
        assert Edge.between((1, 0), (0, 0)) == Edge.between((0, 0), (1, 0)) == Edge.horizontal(0, 0)

    def test_between_rejects_non_neighbours(self) -> None:
        with pytest.raises(ValueError):
            Edge.between((0, 0), (1, 1))
        with pytest.raises(ValueError):
            Edge.between((0, 0), (0, 0))

    def test_orientation(self) -> None:
        assert Edge.horizontal(3, -2).orientation is Orientation.HORIZONTAL
        assert Edge.vertical(3, -2).orientation is Orientation.VERTICAL

    def test_max_norm_uses_farther_endpoint(self) -> None:
        assert Edge.horizontal(0, 0).max_norm == 1
        assert Edge.vertical(-3, 1).max_norm == 3

    def test_incident_edges_are_distinct(self) -> None:
        edges = incident_edges(Site(2, -1))
        assert len(set(edges)) == 4
        assert all(Site(2, -1) in (e.a, e.b) for e in edges)


class TestDual:
    @pytest.mark.parametrize("edge", [Edge.horizontal(0, 0), Edge.vertical(-2, 5), Edge.horizontal(-7, -7)])
    def test_dual_round_trip(self, edge: Edge) -> None:
        assert dual_to_primal(dual(edge)) == edge

    def test_dual_of_horizontal_edge_is_vertical(self) -> None:
        d = dual(Edge.horizontal(0, 0))
        assert d.a == (0.5, -0.5)
        assert d.b == (0.5, 0.5)

    def test_dual_points_must_be_half_integers(self) -> None:
        with pytest.raises(ValueError):
            DualEdge((0, 1), (1, 1))


class TestRegions:
    def test_box_contains_and_sites(self) -> None:
        box = Box(1)
        assert box.contains((1, -1))
        assert not box.contains((2, 0))
        assert len(box.sites()) == 9

    def test_box_rejects_negative_radius(self) -> None:
        with pytest.raises(ValueError):
            Box(-1)

    def test_annulus_excludes_inner_box(self) -> None:
        ann = Annulus(1, 3)
        assert not ann.contains((1, 0))
        assert ann.contains((2, 0))
        assert ann.contains((-3, 3))
        assert not ann.contains((4, 0))

    def test_annulus_needs_ordered_radii(self) -> None:
        with pytest.raises(ValueError):
            Annulus(3, 3)

    def test_edge_in_region_needs_both_endpoints(self) -> None:
        ann = Annulus(1, 3)
        assert not edge_in_region(Edge.horizontal(1, 0), ann)
        assert edge_in_region(Edge.horizontal(2, 0), ann)

    def test_edges_in_box_count(self) -> None:
        # B(n) has (2n+1) rows of 2n edges in each orientation
        for n in (1, 2, 5):
            assert len(edges_in_box(n)) == 2 * (2 * n + 1) * (2 * n)


class TestAnnulusIndex:
    @pytest.mark.parametrize(
        ("edge", "k"),
        [
            (Edge.horizontal(0, 0), 1),
            (Edge.horizontal(1, 0), 1),
            (Edge.horizontal(2, 0), 2),
            (Edge.vertical(4, 0), 2),
            (Edge.vertical(5, 0), 3),
            (Edge.horizontal(-9, 0), 4),
        ],
    )
    def test_dyadic_index(self, edge: Edge, k: int) -> None:
        assert annulus_index(edge) == k
        if edge.max_norm > 1:
            assert 2 ** (k - 1) < edge.max_norm <= 2**k


class TestKeys:
    @pytest.mark.parametrize("edge", [Edge.horizontal(0, 0), Edge.vertical(-1000, 77), Edge.horizontal(123456, -654321)])
    def test_edge_key_round_trip(self, edge: Edge) -> None:
        assert edge_from_key(edge_key(edge)) == edge

    def test_orientation_bit_separates_keys(self) -> None:
        assert edge_key(Edge.horizontal(3, 3)) != edge_key(Edge.vertical(3, 3))

    def test_site_key_round_trip(self) -> None:
        assert site_from_key(site_key(-5, 9)) == Site(-5, 9)

    def test_chebyshev(self) -> None:
        assert chebyshev((-4, 2)) == 4


class TestCodec:
    def test_encode(self) -> None:
        assert encode_edge(Edge.horizontal(-1, 2)) == "H -1 2"
        assert encode_edge(Edge.vertical(0, -3)) == "V 0 -3"

    def test_decode(self) -> None:
        assert decode_edge("V 0 -3") == Edge.vertical(0, -3)

    def test_decode_rejects_unknown_tag(self) -> None:
        with pytest.raises(ValueError):
            decode_edge("D 0 0")
