"""Array-backed disjoint sets with union by size and path halving."""

from __future__ import annotations

__all__ = ["DisjointSet"]


class DisjointSet:
    """Disjoint sets over ``0 .. size-1``.

    Virtual terminal nodes (left/right side of a rectangle, inner/outer boundary of
    an annulus) are ordinary elements allocated with :meth:`add`.

    >>> ds = DisjointSet(4)
    >>> ds.union(0, 1)
    True
    >>> ds.connected(1, 0), ds.connected(2, 3)
    (True, False)
    """

    __slots__ = ("_parent", "_size")

    def __init__(self, size: int) -> None:
        self._parent = list(range(size))
        self._size = [1] * size

    def __len__(self) -> int:
        return len(self._parent)

    def add(self) -> int:
        """Append a fresh singleton and return its index."""
        idx = len(self._parent)
        self._parent.append(idx)
        self._size.append(1)
        return idx

    def find(self, x: int) -> int:
        parent = self._parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, x: int, y: int) -> bool:
        """Merge the sets of *x* and *y*; ``False`` if they were already merged."""
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        if self._size[rx] < self._size[ry]:
            rx, ry = ry, rx
        self._parent[ry] = rx
        self._size[rx] += self._size[ry]
        return True

    def connected(self, x: int, y: int) -> bool:
        return self.find(x) == self.find(y)

    def component_size(self, x: int) -> int:
        return self._size[self.find(x)]
