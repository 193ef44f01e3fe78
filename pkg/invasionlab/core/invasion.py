"""Invasion engine – greedy growth along the minimum-weight outer boundary edge.

The engine keeps a binary heap of boundary edges. An edge is pushed exactly once,
when the first of its endpoints is invaded; ties are broken by the packed edge id.
Heap items are single integers, the IEEE bits of the weight above the packed edge
key, so the heap compares plain ints. Weights are read in 64 x 64 site tiles
through the field's vectorised path, and invaded sites live in a byte grid that
doubles its half-width whenever the cluster comes near its rim.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from heapq import heappop, heappush
from pathlib import Path
from typing import Any, Iterator, NamedTuple

import numpy as np

from invasionlab import __version__
from invasionlab.core.errors import ResourceLimitError
from invasionlab.core.lattice import (
    COORD_OFFSET,
    Box,
    Edge,
    Site,
    decode_edge,
    edge_from_key,
    edge_key,
    encode_edge,
    incident_edges,
    site_key,
)
from invasionlab.core.weightfield import MIXER_VERSION, WeightField

__all__ = [
    "DEFAULT_HARD_CAP",
    "StopReason",
    "InvasionConfig",
    "TraceEntry",
    "InvasionTrace",
    "outer_boundary",
    "invade",
    "truncated_invasion",
    "verify_greedy",
    "is_prefix",
    "dump_trace",
    "load_trace_entries",
    "trace_radius",
]

logger = logging.getLogger(__name__)

DEFAULT_HARD_CAP = 100_000_000

_OFF = COORD_OFFSET
_LOW32 = 0xFFFFFFFF
_KEY_BITS = 64
_KEY_MASK = (1 << _KEY_BITS) - 1

_TILE_SHIFT = 6
_TILE = 1 << _TILE_SHIFT
_TILE_MASK = _TILE - 1
# offsets inside a tile laid out as (u, v, vertical)
_U_STEP = 1 << (_TILE_SHIFT + 1)
_U_WRAP = _TILE_MASK << (_TILE_SHIFT + 1)
_V_WRAP = _TILE_MASK << 1 | 1
_ORIENT = np.array([0, 1], dtype=np.uint64)


class StopReason(str, Enum):
    RADIUS_HIT = "radius_hit"
    STEPS_EXHAUSTED = "steps_exhausted"


@dataclass(frozen=True)
class InvasionConfig:
    """Seed region, stop rule and environment of one invasion run.

    ``seed_radius=None`` starts from the origin; an integer r pre-invades B(r).
    At least one of ``stop_radius`` / ``stop_steps`` must be given; the run ends at
    whichever comes first.
    """

    field: WeightField
    seed_radius: int | None = None
    stop_radius: int | None = None
    stop_steps: int | None = None
    hard_cap: int = DEFAULT_HARD_CAP

    def __post_init__(self) -> None:
        if self.stop_radius is None and self.stop_steps is None:
            raise ValueError("an invasion needs a stop radius or a step budget")
        if self.stop_radius is not None and self.stop_radius < 1:
            raise ValueError("stop radius must be >= 1")
        if self.stop_steps is not None and self.stop_steps < 1:
            raise ValueError("step budget must be >= 1")
        if self.seed_radius is not None and self.seed_radius < 0:
            raise ValueError("seed radius must be >= 0")

    @property
    def seed_region(self) -> Box:
        return Box(self.seed_radius or 0)

    def echo(self) -> dict[str, Any]:
        return {
            "master_seed": self.field.seed.master,
            "replica": self.field.seed.replica_index,
            "seed_radius": self.seed_radius,
            "stop_radius": self.stop_radius,
            "stop_steps": self.stop_steps,
            "hard_cap": self.hard_cap,
        }


class TraceEntry(NamedTuple):
    step: int
    edge: Edge
    weight: float


@dataclass
class InvasionTrace:
    config: InvasionConfig
    keys: np.ndarray
    weights: np.ndarray
    stop_reason: StopReason

    def __len__(self) -> int:
        return int(self.weights.shape[0])

    def entry(self, step: int) -> TraceEntry:
        i = step - 1
        return TraceEntry(step, edge_from_key(int(self.keys[i])), float(self.weights[i]))

    @property
    def entries(self) -> list[TraceEntry]:
        return list(self.iter_entries())

    def iter_entries(self) -> Iterator[TraceEntry]:
        for i in range(len(self)):
            yield TraceEntry(i + 1, edge_from_key(int(self.keys[i])), float(self.weights[i]))

    def edges(self) -> list[Edge]:
        return [edge_from_key(int(k)) for k in self.keys]

    @cached_property
    def invaded_sites(self) -> frozenset[int]:
        """Packed keys of the seed box and of every endpoint of a trace edge."""
        seed_sites, _ = _seed_keys(self.seed_norm)
        xs, ys, vertical = self.coordinates()
        near = (xs + _OFF) << 32 | (ys + _OFF)
        far = (xs + _OFF + ~vertical) << 32 | (ys + _OFF + vertical)
        return frozenset(seed_sites).union(near.tolist(), far.tolist())

    @cached_property
    def invaded_edges(self) -> frozenset[int]:
        """Packed keys of the seed-box edges and of every trace edge."""
        _, seed_edges = _seed_keys(self.seed_norm)
        return frozenset(seed_edges).union(self.keys.tolist())

    def sites(self) -> set[Site]:
        return {Site((k >> 32) - _OFF, (k & _LOW32) - _OFF) for k in self.invaded_sites}

    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Lower-left x, y and vertical flag of every entry."""
        keys = self.keys.astype(np.uint64)
        xs = (keys >> np.uint64(33)).astype(np.int64) - _OFF
        ys = ((keys >> np.uint64(1)) & np.uint64(_LOW32)).astype(np.int64) - _OFF
        vertical = (keys & np.uint64(1)).astype(bool)
        return xs, ys, vertical

    def max_norms(self) -> np.ndarray:
        """Chebyshev norm of the farther endpoint of every entry."""
        xs, ys, vertical = self.coordinates()
        bx = xs + (~vertical)
        by = ys + vertical
        return np.maximum(np.maximum(np.abs(xs), np.abs(ys)), np.maximum(np.abs(bx), np.abs(by)))

    @property
    def seed_norm(self) -> int:
        return self.config.seed_radius or 0


def outer_boundary(invaded_sites: set[Site], invaded_edges: set[Edge]) -> set[Edge]:
    """Edges not invaded with at least one invaded endpoint."""
    if not invaded_sites:
        raise ValueError("the invaded region must contain at least one site")
    return {e for s in invaded_sites for e in incident_edges(s) if e not in invaded_edges}


def _seed_keys(r: int) -> tuple[set[int], set[int]]:
    sites = {site_key(x, y) for x in range(-r, r + 1) for y in range(-r, r + 1)}
    edges: set[int] = set()
    for x in range(-r, r + 1):
        for y in range(-r, r + 1):
            if x < r:
                edges.add(edge_key(Edge.horizontal(x, y)))
            if y < r:
                edges.add(edge_key(Edge.vertical(x, y)))
    return sites, edges


class _Window:
    """Square window of the lattice around the origin: invaded flags and weight tiles.

    Local coordinates are ``u = x + half``. The site grid is a flat bytearray of side
    ``2 * half``; tiles hold the float64 bits of the edges owned by their sites, laid
    out as ``(u, v, vertical)`` and filled on first touch.
    """

    def __init__(self, field: WeightField, half: int, limit: int | None) -> None:
        self.field = field
        self.limit = limit
        self.half = 0
        self.side = 0
        self.grid = bytearray()
        self.tiles: list[np.ndarray | None] = []
        self.row = 0
        self.resize(half)

    @property
    def base(self) -> int:
        return _OFF - self.half

    def resize(self, half: int) -> None:
        half = -(-half // _TILE) * _TILE
        if self.limit is not None:
            half = min(half, -(-self.limit // _TILE) * _TILE)
        if half <= self.half:
            return
        shift = half - self.half
        side = 2 * half
        grid = bytearray(side * side)
        if self.side:
            view = np.frombuffer(grid, dtype=np.uint8).reshape(side, side)
            old = np.frombuffer(self.grid, dtype=np.uint8).reshape(self.side, self.side)
            view[shift : shift + self.side, shift : shift + self.side] = old
        row = side >> _TILE_SHIFT
        tiles: list[np.ndarray | None] = [None] * (row * row)
        moved = shift >> _TILE_SHIFT
        for idx, tile in enumerate(self.tiles):
            if tile is not None:
                tu, tv = divmod(idx, self.row)
                tiles[(tu + moved) * row + tv + moved] = tile
        logger.debug("Invasion window grown to half-width %d", half)
        self.half, self.side, self.grid, self.tiles, self.row = half, side, grid, tiles, row

    def mark_box(self, r: int) -> None:
        view = np.frombuffer(self.grid, dtype=np.uint8).reshape(self.side, self.side)
        view[self.half - r : self.half + r + 1, self.half - r : self.half + r + 1] = 1

    def tile(self, u: int, v: int) -> np.ndarray:
        tu, tv = u >> _TILE_SHIFT, v >> _TILE_SHIFT
        idx = tu * self.row + tv
        tile = self.tiles[idx]
        if tile is None:
            xs = np.arange(tu * _TILE, (tu + 1) * _TILE, dtype=np.uint64) + np.uint64(self.base)
            ys = np.arange(tv * _TILE, (tv + 1) * _TILE, dtype=np.uint64) + np.uint64(self.base)
            keys = (xs[:, None, None] << np.uint64(33)) | (ys[None, :, None] << np.uint64(1)) | _ORIENT
            weights = np.ascontiguousarray(self.field.weights_of_keys(keys.ravel()), dtype=np.float64)
            tile = self.tiles[idx] = weights.view(np.uint64)
        return tile

    def frontier(self, heap: list[int], x: int, y: int) -> None:
        """Push the edges from invaded site (x, y) towards uninvaded neighbours."""
        side, grid = self.side, self.grid
        u, v = x + self.half, y + self.half
        X, Y = x + _OFF, y + _OFF
        i = u * side + v
        own = self.tile(u, v)
        o = (u & _TILE_MASK) << (_TILE_SHIFT + 1) | (v & _TILE_MASK) << 1
        if not grid[i + side]:
            heappush(heap, own.item(o) << _KEY_BITS | X << 33 | Y << 1)
        if not grid[i + 1]:
            heappush(heap, own.item(o | 1) << _KEY_BITS | X << 33 | Y << 1 | 1)
        if not grid[i - side]:
            bits = own.item(o - _U_STEP) if u & _TILE_MASK else self.tile(u - 1, v).item(o + _U_WRAP)
            heappush(heap, bits << _KEY_BITS | (X - 1) << 33 | Y << 1)
        if not grid[i - 1]:
            bits = own.item(o - 1) if v & _TILE_MASK else self.tile(u, v - 1).item(o + _V_WRAP)
            heappush(heap, bits << _KEY_BITS | X << 33 | (Y - 1) << 1 | 1)


def invade(cfg: InvasionConfig) -> InvasionTrace:
    """Run the invasion described by *cfg*.

    Raises :class:`ResourceLimitError` when more than ``cfg.hard_cap`` edges would be
    invaded.
    """
    seed_r = cfg.seed_radius or 0
    stop_radius = cfg.stop_radius
    stop_steps = cfg.stop_steps
    cap = cfg.hard_cap

    if stop_radius is not None and seed_r >= stop_radius:
        logger.debug("Seed region B(%d) already touches the stop radius %d", seed_r, stop_radius)
        return InvasionTrace(cfg, np.zeros(0, np.uint64), np.zeros(0), StopReason.RADIUS_HIT)

    # pushed edges reach norm stop_radius; the grid keeps a spare ring past it
    win = _Window(cfg.field, max(2 * (seed_r + 2), _TILE), None if stop_radius is None else stop_radius + 2)
    win.mark_box(seed_r)
    heap: list[int] = []
    for x in range(-seed_r, seed_r + 1):
        for y in range(-seed_r, seed_r + 1):
            if max(abs(x), abs(y)) == seed_r:
                win.frontier(heap, x, y)

    out_keys: list[int] = []
    out_bits: list[int] = []
    pop = heappop
    frontier = win.frontier
    half, side, grid = win.half, win.side, win.grid
    n = 0
    reason = StopReason.STEPS_EXHAUSTED
    while heap:
        item = pop(heap)
        k = item & _KEY_MASK
        out_keys.append(k)
        out_bits.append(item >> _KEY_BITS)
        n += 1
        if n > cap:
            raise ResourceLimitError(cap, n)

        x = (k >> 33) - _OFF
        y = ((k >> 1) & _LOW32) - _OFF
        i = (x + half) * side + y + half
        if not grid[i]:
            new = True
        elif not grid[i + 1 if k & 1 else i + side]:
            new = True
            if k & 1:
                y += 1
            else:
                x += 1
        else:
            new = False
        if new:
            grid[(x + half) * side + y + half] = 1
            norm = max(abs(x), abs(y))
            if stop_radius is not None and norm >= stop_radius:
                reason = StopReason.RADIUS_HIT
                break
            if norm >= half - 1:
                win.resize(2 * half)
                half, side, grid = win.half, win.side, win.grid
            frontier(heap, x, y)
        if stop_steps is not None and n >= stop_steps:
            reason = StopReason.STEPS_EXHAUSTED
            break

    logger.debug("Invasion %s stopped after %d steps (%s)", cfg.echo(), n, reason.value)
    return InvasionTrace(
        config=cfg,
        keys=np.array(out_keys, dtype=np.uint64),
        weights=np.array(out_bits, dtype=np.uint64).view(np.float64),
        stop_reason=reason,
    )


def truncated_invasion(
    field: WeightField,
    k: int,
    l: int,
    m: int,
    hard_cap: int = DEFAULT_HARD_CAP,
) -> InvasionTrace:
    """Invasion that swallows B(2^(k-m)) at step 0 and stops on reaching radius 2^(k+l+m).

    When k < m the seed region is the origin alone.
    """
    if k < 0 or m < 1 or l < 1:
        raise ValueError(f"need k >= 0, l >= 1, m >= 1; got k={k}, l={l}, m={m}")
    seed_radius = 2 ** (k - m) if k >= m else None
    cfg = InvasionConfig(field=field, seed_radius=seed_radius, stop_radius=2 ** (k + l + m), hard_cap=hard_cap)
    return invade(cfg)


def _endpoint_keys(trace: InvasionTrace) -> tuple[np.ndarray, np.ndarray]:
    xs, ys, vertical = trace.coordinates()
    near = (xs + _OFF) << 32 | (ys + _OFF)
    far = (xs + _OFF + ~vertical) << 32 | (ys + _OFF + vertical)
    return near, far


def _site_steps(trace: InvasionTrace) -> tuple[np.ndarray, np.ndarray]:
    """Sorted packed site keys and the step at which each was reached (0 for the seed box)."""
    n = len(trace)
    near, far = _endpoint_keys(trace)
    seed = np.array(sorted(_seed_keys(trace.seed_norm)[0]), dtype=np.int64)
    step_no = np.arange(1, n + 1, dtype=np.int64)
    keys = np.concatenate([seed, near, far])
    steps = np.concatenate([np.zeros(len(seed), dtype=np.int64), step_no, step_no])
    order = np.lexsort((steps, keys))
    keys, steps = keys[order], steps[order]
    first = np.ones(len(keys), dtype=bool)
    first[1:] = keys[1:] != keys[:-1]
    return keys[first], steps[first]


def _lookup(sorted_keys: np.ndarray, values: np.ndarray, queries: np.ndarray, missing: int) -> np.ndarray:
    pos = np.minimum(np.searchsorted(sorted_keys, queries), len(sorted_keys) - 1)
    return np.where(sorted_keys[pos] == queries, values[pos], missing)


def _range_max_table(values: np.ndarray) -> list[np.ndarray]:
    table = [values]
    span = 1
    while 2 * span <= len(values):
        prev = table[-1]
        table.append(np.maximum(prev[:-span], prev[span:]))
        span *= 2
    return table


def _range_max(table: list[np.ndarray], lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Maxima of the underlying array on the inclusive 0-based ranges [lo, hi]."""
    levels = np.frexp((hi - lo + 1).astype(np.float64))[1].astype(np.int64) - 1
    out = np.empty(len(lo), dtype=np.float64)
    for level in np.unique(levels).tolist():
        sel = levels == level
        row = table[level]
        out[sel] = np.maximum(row[lo[sel]], row[hi[sel] - (1 << level) + 1])
    return out


def verify_greedy(trace: InvasionTrace) -> list[int]:
    """Steps at which the recorded edge was not the boundary minimum (empty if none).

    Every edge that ever touched the invaded region is on the boundary from the step
    after its first endpoint was reached until it is invaded; all edges invaded in
    that window must be lighter.
    """
    n = len(trace)
    if n == 0:
        return []
    sites, steps = _site_steps(trace)
    near, far = _endpoint_keys(trace)
    step_no = np.arange(1, n + 1, dtype=np.int64)
    reached = np.minimum(_lookup(sites, steps, near, n + 1), _lookup(sites, steps, far, n + 1))
    bad = set(step_no[reached >= step_no].tolist())

    # every edge incident to a reached site
    X = (sites >> 32).astype(np.uint64)
    Y = (sites & _LOW32).astype(np.uint64)
    one, k33 = np.uint64(1), np.uint64(33)
    candidates = np.unique(
        np.concatenate(
            [
                X << k33 | Y << one,
                X << k33 | Y << one | one,
                (X - one) << k33 | Y << one,
                X << k33 | (Y - one) << one | one,
            ]
        )
    )
    cx = (candidates >> k33).astype(np.int64)
    cy = ((candidates >> one) & np.uint64(_LOW32)).astype(np.int64)
    cv = (candidates & one).astype(np.int64)
    a = cx << 32 | cy
    b = (cx + 1 - cv) << 32 | (cy + cv)
    seed_r = trace.seed_norm
    outside = np.maximum(
        np.maximum(np.abs(cx - _OFF), np.abs(cy - _OFF)),
        np.maximum(np.abs(cx + 1 - cv - _OFF), np.abs(cy + cv - _OFF)),
    ) > seed_r
    candidates, a, b = candidates[outside], a[outside], b[outside]

    order = np.argsort(trace.keys)
    invaded_at = _lookup(trace.keys[order], order + 1, candidates, n + 1)
    lo = np.minimum(_lookup(sites, steps, a, n + 1), _lookup(sites, steps, b, n + 1)) + 1
    hi = np.minimum(invaded_at - 1, n)
    open_ = lo <= hi
    candidates, lo, hi = candidates[open_], lo[open_], hi[open_]
    if len(candidates) == 0:
        return sorted(bad)

    own = trace.config.field.weights_of_keys(candidates)
    heavier = _range_max(_range_max_table(trace.weights), lo - 1, hi - 1) >= own
    for w, start, stop in zip(own[heavier].tolist(), lo[heavier].tolist(), hi[heavier].tolist()):
        # locate the offending steps for the report
        window = trace.weights[start - 1 : stop]
        bad.update((start + np.nonzero(window >= w)[0]).tolist())
    return sorted(bad)


def is_prefix(short: InvasionTrace, long: InvasionTrace) -> bool:
    """True when *short* records the first ``len(short)`` steps of *long*."""
    if len(short) > len(long):
        return False
    return bool(np.array_equal(short.keys, long.keys[: len(short)]))


def dump_trace(trace: InvasionTrace, path: Path, *, ledger: str | None = None, config_hash: str = "") -> Path:
    """Write *trace* as JSONL: a header line, then one ``{step, edge, weight}`` per line."""
    header = {
        "header": {
            "tool_version": __version__,
            "config_hash": config_hash,
            "master_seed": trace.config.field.seed.master,
            "mixer": MIXER_VERSION,
            "config": trace.config.echo(),
            "stop_reason": trace.stop_reason.value,
            "seed_region": trace.config.seed_region.radius if trace.config.seed_radius is not None else "origin",
            "seed_ledger": ledger,
        }
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for step, e, w in trace.iter_entries():
            fh.write(f'{{"step": {step}, "edge": "{encode_edge(e)}", "weight": {w:.17g}}}\n')
    logger.info("Trace with %d entries written to %s", len(trace), path)
    return path


def load_trace_entries(path: Path) -> tuple[dict[str, Any], list[TraceEntry]]:
    """Read a trace dump back into its header and entries."""
    header: dict[str, Any] = {}
    entries: list[TraceEntry] = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            record = json.loads(line)
            if "header" in record:
                header = record["header"]
                continue
            entries.append(TraceEntry(int(record["step"]), decode_edge(record["edge"]), float(record["weight"])))
    return header, entries


def trace_radius(trace: InvasionTrace) -> int:
    """Largest Chebyshev norm reached by the invaded region."""
    if len(trace) == 0:
        return trace.seed_norm
    return max(int(trace.max_norms().max()), trace.seed_norm)
