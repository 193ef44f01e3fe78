"""Outlets and ponds of a finite invasion trace.

Outlets are the strict suffix maxima of the invaded weight sequence above a
threshold (p_c by default). A run stopped on a radius certifies its outlets: every
edge invaded after an outlet is then lighter than it, all the way to the stop
boundary. Counting operations additionally require the queried scale to sit
``buffer`` dyadic scales inside the stop radius.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from invasionlab.core.errors import InsufficientDataError, PairingError, UncertifiedRegionError
from invasionlab.core.invasion import InvasionTrace, StopReason, truncated_invasion
from invasionlab.core.lattice import Edge, annulus_index, edge_from_key, edge_key, encode_edge
from invasionlab.core.weightfield import WeightField
from invasionlab.utils.output import write_csv

__all__ = [
    "P_C",
    "OutletRecord",
    "PondDecomposition",
    "WeightExtremes",
    "extract_outlets",
    "decompose",
    "cumulative_counts",
    "q_index",
    "count_in_window",
    "weight_extremes",
    "surrogate_trace",
    "surrogate_counts",
    "decomposition_violations",
    "write_decomposition_csv",
    "write_counts_csv",
]

logger = logging.getLogger(__name__)

P_C = 0.5


@dataclass(frozen=True)
class OutletRecord:
    edge: Edge
    weight: float
    step: int
    annulus_k: int
    certified: bool


@dataclass
class PondDecomposition:
    outlets: list[OutletRecord]
    pond_of_step: np.ndarray = field(repr=False)
    radii: list[int]
    pond_sizes: list[int]
    trailing_size: int
    counts: dict[int, int]
    certified_scale: int | None
    p_threshold: float = P_C

    @property
    def cumulative(self) -> dict[int, int]:
        total = 0
        out: dict[int, int] = {}
        for k in sorted(self.counts):
            total += self.counts[k]
            out[k] = total
        return out

    @property
    def outlet_weights(self) -> list[float]:
        return [o.weight for o in self.outlets]

    def radius(self, k: int) -> int | None:
        """R̂_k, or ``None`` when fewer than k outlets exist."""
        return self.radii[k - 1] if 1 <= k <= len(self.radii) else None


@dataclass(frozen=True)
class WeightExtremes:
    f: float | None
    g: float


def extract_outlets(trace: InvasionTrace, p_threshold: float = P_C) -> list[OutletRecord]:
    """Entries heavier than *p_threshold* and than every later entry, in step order."""
    w = trace.weights
    if w.size == 0:
        return []
    later = np.full(w.shape, -np.inf)
    later[:-1] = np.maximum.accumulate(w[::-1])[::-1][1:]
    idx = np.nonzero((w > later) & (w > p_threshold))[0]
    certified = trace.stop_reason is StopReason.RADIUS_HIT
    records = []
    for i in idx.tolist():
        e = edge_from_key(int(trace.keys[i]))
        records.append(OutletRecord(e, float(w[i]), i + 1, annulus_index(e), certified))
    return records


def _certified_scale(trace: InvasionTrace, buffer: int) -> int | None:
    if trace.stop_reason is not StopReason.RADIUS_HIT or trace.config.stop_radius is None:
        return None
    return max(int(math.floor(math.log2(trace.config.stop_radius))) - buffer, 0)


def decompose(
    trace: InvasionTrace,
    outlets: list[OutletRecord],
    buffer: int = 0,
    p_threshold: float = P_C,
) -> PondDecomposition:
    """Split *trace* into ponds at *outlets*.

    R̂_k is the Chebyshev radius of the region invaded before outlet k, i.e. the union
    of ponds 1..k (earlier outlets included, outlet k itself excluded).
    """
    n = len(trace)
    steps = [o.step for o in outlets]
    if any(b <= a for a, b in zip(steps, steps[1:])):
        raise PairingError("outlet steps are not strictly increasing")
    for o in outlets:
        if not 1 <= o.step <= n:
            raise PairingError(f"outlet step {o.step} outside a trace of {n} entries")
        if int(trace.keys[o.step - 1]) != edge_key(o.edge) or float(trace.weights[o.step - 1]) != o.weight:
            raise PairingError(f"outlet at step {o.step} does not match the trace entry")

    pond_of_step = np.zeros(n, dtype=np.int64)
    if n:
        marks = np.zeros(n, dtype=np.int64)
        for s in steps:
            marks[s - 1] = 1
        pond_of_step = np.cumsum(marks) - marks + 1
        pond_of_step[np.array(steps, dtype=np.int64) - 1] = 0

    norms = trace.max_norms() if n else np.zeros(0, dtype=np.int64)
    prefix = np.maximum.accumulate(norms) if n else norms
    radii = [max(trace.seed_norm, int(prefix[s - 2]) if s >= 2 else 0) for s in steps]

    sizes = np.bincount(pond_of_step, minlength=len(outlets) + 2) if n else np.zeros(len(outlets) + 2, dtype=np.int64)
    pond_sizes = [int(v) for v in sizes[1 : len(outlets) + 1]]
    trailing = int(sizes[len(outlets) + 1]) if n else 0

    scale = _certified_scale(trace, buffer)
    top = scale if scale is not None else max((o.annulus_k for o in outlets), default=0)
    counts = {k: 0 for k in range(1, top + 1)}
    for o in outlets:
        if o.annulus_k in counts:
            counts[o.annulus_k] += 1

    return PondDecomposition(
        outlets=list(outlets),
        pond_of_step=pond_of_step,
        radii=radii,
        pond_sizes=pond_sizes,
        trailing_size=trailing,
        counts=counts,
        certified_scale=scale,
        p_threshold=p_threshold,
    )


def _require_certified(dec: PondDecomposition, scale: int) -> None:
    if dec.certified_scale is None or scale > dec.certified_scale:
        raise UncertifiedRegionError(scale, dec.certified_scale)


def cumulative_counts(dec: PondDecomposition, n: int) -> int:
    """O(n) = O_1 + ... + O_n."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return 0
    _require_certified(dec, n)
    return sum(dec.counts[k] for k in range(1, n + 1))


def q_index(dec: PondDecomposition, n: int) -> int:
    """Q_n = min{k : O(k) >= n}."""
    if n < 1:
        raise ValueError("Q_n is defined for n >= 1")
    if dec.certified_scale is None:
        raise UncertifiedRegionError(1, None)
    total = 0
    for k in range(1, dec.certified_scale + 1):
        total += dec.counts[k]
        if total >= n:
            return k
    raise InsufficientDataError(n, total)


def count_in_window(dec: PondDecomposition, n: int, m: int) -> int:
    """O(n, n+m): outlets with annulus index in (n, n+m]."""
    if n < 0 or m < 0:
        raise ValueError("window bounds must be non-negative")
    if m == 0:
        return 0
    _require_certified(dec, n + m)
    return sum(dec.counts[k] for k in range(n + 1, n + m + 1))


def weight_extremes(dec: PondDecomposition, n: int) -> WeightExtremes:
    """f(n): heaviest certified outlet outside B(n); g(n): lightest inside B(n), 0 if none."""
    inside: list[float] = []
    outside: list[float] = []
    for o in dec.outlets:
        if not o.certified:
            continue
        (inside if o.edge.max_norm <= n else outside).append(o.weight)
    return WeightExtremes(f=max(outside) if outside else None, g=min(inside) if inside else 0.0)


def surrogate_trace(field: WeightField, k: int, m: int, hard_cap: int | None = None) -> InvasionTrace:
    """The truncated run G(k-1, 1, floor(m/2) - 1) behind Õ_k.

    The run depends only on edges inside B(2^(k-1+floor(m/2))) with an endpoint outside
    the seed box B(2^(k-floor(m/2))), so surrogates at scales m or more apart share no edge.
    """
    if k < 1 or m < 4:
        raise ValueError(f"need k >= 1 and m >= 4, got k={k}, m={m}")
    kwargs = {} if hard_cap is None else {"hard_cap": hard_cap}
    return truncated_invasion(field, k - 1, 1, m // 2 - 1, **kwargs)


def surrogate_counts(
    field: WeightField,
    k: int,
    m: int,
    p_threshold: float = P_C,
    hard_cap: int | None = None,
) -> int:
    """Õ_k: outlets in annulus k of :func:`surrogate_trace`."""
    trace = surrogate_trace(field, k, m, hard_cap)
    return sum(1 for o in extract_outlets(trace, p_threshold) if o.annulus_k == k)


def decomposition_violations(dec: PondDecomposition) -> list[str]:
    """Structural properties every decomposition satisfies; returns the broken ones."""
    problems: list[str] = []
    w = dec.outlet_weights
    if any(b >= a for a, b in zip(w, w[1:])):
        problems.append("outlet weights are not strictly decreasing")
    if any(b < a for a, b in zip(dec.radii, dec.radii[1:])):
        problems.append("pond radii are not nondecreasing")
    if any(o.certified and o.weight <= dec.p_threshold for o in dec.outlets):
        problems.append("a certified outlet does not exceed the threshold")
    if dec.certified_scale is not None:
        available = sum(dec.counts.values())
        for j in range(1, min(available, len(dec.radii)) + 1):
            r = dec.radii[j - 1]
            if r >= 1 and q_index(dec, j) > math.log2(r) + 1:
                problems.append(f"Q_{j} exceeds log2(R_{j}) + 1")
    return problems


def write_decomposition_csv(path: Path, header: dict, replicas: list[tuple[int, PondDecomposition]]) -> Path:
    rows = [
        (rep, j, o.step, encode_edge(o.edge), f"{o.weight:.17g}", o.annulus_k, int(o.certified))
        for rep, dec in replicas
        for j, o in enumerate(dec.outlets, start=1)
    ]
    return write_csv(path, header, ("replica", "outlet_index", "step", "edge", "weight", "annulus_k", "certified"), rows)


def write_counts_csv(path: Path, header: dict, replicas: list[tuple[int, PondDecomposition]]) -> Path:
    rows = [(rep, k, dec.counts[k]) for rep, dec in replicas for k in sorted(dec.counts)]
    return write_csv(path, header, ("replica", "k", "O_k"), rows)
