"""Geometry of the square lattice Z^2 and its dual.

Sites are integer points, edges join nearest neighbours and are stored with the
lexicographically smaller endpoint first. Dual points live on (1/2, 1/2) + Z^2 and
are stored with doubled coordinates so all arithmetic stays exact.

Hot loops (invasion, crossings) work on packed integer keys rather than on the
value types; :func:`edge_key` / :func:`edge_from_key` convert between the two.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

__all__ = [
    "Orientation",
    "Site",
    "Edge",
    "DualEdge",
    "Box",
    "Annulus",
    "Region",
    "ORIGIN",
    "COORD_OFFSET",
    "COORD_LIMIT",
    "incident_edges",
    "chebyshev",
    "dual",
    "dual_to_primal",
    "edge_in_region",
    "annulus_index",
    "edge_key",
    "edge_from_key",
    "site_key",
    "site_from_key",
    "encode_edge",
    "decode_edge",
    "edges_in_box",
]

COORD_OFFSET = 1 << 30
COORD_LIMIT = COORD_OFFSET - 1


class Orientation(str, Enum):
    HORIZONTAL = "H"
    VERTICAL = "V"


class Site(NamedTuple):
    x: int
    y: int


ORIGIN = Site(0, 0)


class Edge(NamedTuple):
    """Nearest-neighbour edge; build through :meth:`between` to canonicalise."""

    a: Site
    b: Site

    @classmethod
    def between(cls, u: tuple[int, int], v: tuple[int, int]) -> Edge:
        su, sv = Site(*u), Site(*v)
        if abs(su.x - sv.x) + abs(su.y - sv.y) != 1:
            raise ValueError(f"{su} and {sv} are not nearest neighbours")
        return cls(su, sv) if su <= sv else cls(sv, su)

    @classmethod
    def horizontal(cls, x: int, y: int) -> Edge:
        return cls(Site(x, y), Site(x + 1, y))

    @classmethod
    def vertical(cls, x: int, y: int) -> Edge:
        return cls(Site(x, y), Site(x, y + 1))

    @property
    def orientation(self) -> Orientation:
        return Orientation.HORIZONTAL if self.a.y == self.b.y else Orientation.VERTICAL

    @property
    def max_norm(self) -> int:
        return max(chebyshev(self.a), chebyshev(self.b))


@dataclass(frozen=True)
class DualEdge:
    """Edge of the dual lattice; endpoints in doubled coordinates (both odd)."""

    a2: tuple[int, int]
    b2: tuple[int, int]

    def __post_init__(self) -> None:
        for px, py in (self.a2, self.b2):
            if px % 2 == 0 or py % 2 == 0:
                raise ValueError(f"({px}/2, {py}/2) is not a dual lattice point")
        if self.a2 > self.b2:
            a2, b2 = self.b2, self.a2
            object.__setattr__(self, "a2", a2)
            object.__setattr__(self, "b2", b2)

    @property
    def a(self) -> tuple[float, float]:
        return (self.a2[0] / 2, self.a2[1] / 2)

    @property
    def b(self) -> tuple[float, float]:
        return (self.b2[0] / 2, self.b2[1] / 2)


@dataclass(frozen=True)
class Box:
    """B(center, n): sites within Chebyshev distance n of *center*."""

    radius: int
    center: Site = ORIGIN

    def __post_init__(self) -> None:
        if self.radius < 0:
            raise ValueError("box radius must be non-negative")

    def contains(self, s: tuple[int, int]) -> bool:
        return max(abs(s[0] - self.center.x), abs(s[1] - self.center.y)) <= self.radius

    def sites(self) -> list[Site]:
        cx, cy, n = self.center.x, self.center.y, self.radius
        return [Site(x, y) for x in range(cx - n, cx + n + 1) for y in range(cy - n, cy + n + 1)]


@dataclass(frozen=True)
class Annulus:
    """Ann(center; m, n) = B(n) minus B(m)."""

    inner: int
    outer: int
    center: Site = ORIGIN

    def __post_init__(self) -> None:
        if not 0 <= self.inner < self.outer:
            raise ValueError(f"annulus needs 0 <= inner < outer, got ({self.inner}, {self.outer})")

    def contains(self, s: tuple[int, int]) -> bool:
        d = max(abs(s[0] - self.center.x), abs(s[1] - self.center.y))
        return self.inner < d <= self.outer


Region = Box | Annulus


def chebyshev(s: tuple[int, int]) -> int:
    return max(abs(s[0]), abs(s[1]))


def incident_edges(s: tuple[int, int]) -> list[Edge]:
    """The four edges at *s* in the order E, N, W, S."""
    x, y = s
    return [
        Edge.horizontal(x, y),
        Edge.vertical(x, y),
        Edge.horizontal(x - 1, y),
        Edge.vertical(x, y - 1),
    ]


def dual(e: Edge) -> DualEdge:
    """Perpendicular bisecting dual edge: <e_a + (1/2, 1/2), e_b - (1/2, 1/2)>."""
    ax, ay = 2 * e.a.x, 2 * e.a.y
    bx, by = 2 * e.b.x, 2 * e.b.y
    return DualEdge((ax + 1, ay + 1), (bx - 1, by - 1))


def dual_to_primal(d: DualEdge) -> Edge:
    """Inverse of :func:`dual`: the primal edge crossed by *d*."""
    (ax, ay), (bx, by) = d.a2, d.b2
    if ax == bx:
        # vertical dual edge crosses a horizontal primal edge
        x = (ax - 1) // 2
        y = (min(ay, by) + 1) // 2
        return Edge.horizontal(x, y)
    x = (min(ax, bx) + 1) // 2
    y = (ay - 1) // 2
    return Edge.vertical(x, y)


def edge_in_region(e: Edge, r: Region) -> bool:
    return r.contains(e.a) and r.contains(e.b)


def annulus_index(e: Edge) -> int:
    """The unique k >= 1 with 2^(k-1) < max-norm(e) <= 2^k (k = 1 for max-norm 1)."""
    d = e.max_norm
    if d <= 1:
        return 1
    return (d - 1).bit_length()


def site_key(x: int, y: int) -> int:
    return ((x + COORD_OFFSET) << 32) | (y + COORD_OFFSET)


def site_from_key(key: int) -> Site:
    return Site((key >> 32) - COORD_OFFSET, (key & 0xFFFFFFFF) - COORD_OFFSET)


def edge_key(e: Edge) -> int:
    """Packed 64-bit id: lower-left endpoint and an orientation bit (1 = vertical)."""
    return ((e.a.x + COORD_OFFSET) << 33) | ((e.a.y + COORD_OFFSET) << 1) | (e.a.x == e.b.x)


def edge_from_key(key: int) -> Edge:
    x = (key >> 33) - COORD_OFFSET
    y = ((key >> 1) & 0xFFFFFFFF) - COORD_OFFSET
    return Edge.vertical(x, y) if key & 1 else Edge.horizontal(x, y)


def encode_edge(e: Edge) -> str:
    """``H x y`` (left endpoint) or ``V x y`` (bottom endpoint)."""
    return f"{e.orientation.value} {e.a.x} {e.a.y}"


def decode_edge(text: str) -> Edge:
    tag, xs, ys = text.split()
    if tag == Orientation.HORIZONTAL.value:
        return Edge.horizontal(int(xs), int(ys))
    if tag == Orientation.VERTICAL.value:
        return Edge.vertical(int(xs), int(ys))
    raise ValueError(f"unknown edge tag {tag!r}")


def edges_in_box(n: int) -> list[Edge]:
    """All edges with both endpoints in B(n), horizontal first."""
    out = [Edge.horizontal(x, y) for y in range(-n, n + 1) for x in range(-n, n)]
    out.extend(Edge.vertical(x, y) for x in range(-n, n + 1) for y in range(-n, n))
    return out
