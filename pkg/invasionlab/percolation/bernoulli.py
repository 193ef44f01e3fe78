"""Bernoulli bond percolation on the weight field.

An edge is p-open when its weight is below p, so every event here is evaluated on
the same streams the invasion runs use and is monotone in p on a fixed stream.

Geometry conventions:

* a rectangle ``[0, n] x [0, m]`` holds the sites ``0..n`` by ``0..m``; horizontal
  edge masks are indexed ``[x, y]`` with shape ``(n, m + 1)``, vertical ones with
  shape ``(n + 1, m)``;
* a box ``B(n)`` mask pair is indexed ``[x + n, y + n]`` with shapes ``(2n, 2n + 1)``
  and ``(2n + 1, 2n)``;
* ``Ann(m, n)`` holds the sites with ``m < |s| <= n`` and the edges with both
  endpoints there.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np
from scipy import stats as sps

from invasionlab.analysis.stats import LinearFit, binomial_stderr, linear_fit, loglinear_fit
from invasionlab.core.errors import BracketingError, ExhaustionError
from invasionlab.core.lattice import Box
from invasionlab.core.weightfield import Seed, WeightField
from invasionlab.percolation.disjoint_set import DisjointSet
from invasionlab.utils.output import write_csv
from invasionlab.utils.pool import replica_map

__all__ = [
    "P_C",
    "CrossingSpec",
    "CrossingEstimate",
    "CorrelationLength",
    "PnEstimate",
    "PnScaling",
    "CircuitDecay",
    "CrossingSampler",
    "rectangle_open_masks",
    "box_open_masks",
    "crossing_from_masks",
    "has_crossing",
    "crossing_threshold",
    "crossing_probability",
    "open_circuit_from_masks",
    "open_crossing_from_masks",
    "connects_from_masks",
    "open_circuit_in_annulus",
    "closed_dual_circuit_in_annulus",
    "connects_to_radius",
    "event_probability",
    "correlation_length",
    "correlation_length_ratio",
    "p_n_estimate",
    "pn_log_ratio_fit",
    "circuit_decay_profile",
    "write_sigma_table",
    "write_pn_table",
]

logger = logging.getLogger(__name__)

P_C = 0.5


def _check_p(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")


@dataclass(frozen=True)
class CrossingSpec:
    """Horizontal crossing of ``[0, width] x [0, height]`` by p-open edges."""

    width: int
    height: int
    p: float

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"rectangle sides must be >= 1, got {self.width}x{self.height}")
        _check_p(self.p)


@dataclass(frozen=True)
class CrossingEstimate:
    n: int
    m: int
    p: float
    replicas: int
    value: float
    stderr: float


@dataclass
class CorrelationLength:
    """L̂(p, ε) together with every σ̂(n, n, p) probed on the way."""

    p: float
    epsilon: float
    length: int
    confident: bool
    replicas: int
    probes: dict[int, CrossingEstimate] = field(default_factory=dict)


@dataclass(frozen=True)
class PnEstimate:
    n: int
    epsilon: float
    p_hat: float
    ci_lo: float
    ci_hi: float
    replicas: int


@dataclass(frozen=True)
class PnScaling:
    """Log-log fit of ``p̂_n - p_c`` against n plus all pairwise log ratios."""

    fit: LinearFit
    pair_ratios: dict[tuple[int, int], float]

    @property
    def max_ratio(self) -> float:
        return max(self.pair_ratios.values(), default=float("nan"))

    @property
    def min_ratio(self) -> float:
        return min(self.pair_ratios.values(), default=float("nan"))


@dataclass(frozen=True)
class CircuitDecay:
    p: float
    length: int
    radii: tuple[int, ...]
    probabilities: tuple[float, ...]
    stderrs: tuple[float, ...]
    fit: LinearFit | None


# --------------------------------------------------------------------------- masks


def rectangle_open_masks(field: WeightField, n: int, m: int, p: float) -> tuple[np.ndarray, np.ndarray]:
    _check_p(p)
    return field.horizontal_grid(0, 0, n, m + 1) < p, field.vertical_grid(0, 0, n + 1, m) < p


def box_open_masks(field: WeightField, p: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    _check_p(p)
    return (
        field.horizontal_grid(-n, -n, 2 * n, 2 * n + 1) < p,
        field.vertical_grid(-n, -n, 2 * n + 1, 2 * n) < p,
    )


def _union_open(ds: DisjointSet, h_open: np.ndarray, v_open: np.ndarray, keep=None) -> None:
    """Union the endpoints of every open edge; sites are indexed ``i * rows + j``."""
    rows = v_open.shape[1] + 1
    for i, j in zip(*np.nonzero(h_open)):
        a, b = (int(i), int(j)), (int(i) + 1, int(j))
        if keep is None or (keep(a) and keep(b)):
            ds.union(a[0] * rows + a[1], b[0] * rows + b[1])
    for i, j in zip(*np.nonzero(v_open)):
        a, b = (int(i), int(j)), (int(i), int(j) + 1)
        if keep is None or (keep(a) and keep(b)):
            ds.union(a[0] * rows + a[1], b[0] * rows + b[1])


# ------------------------------------------------------------------- rectangles


def crossing_from_masks(h_open: np.ndarray, v_open: np.ndarray) -> bool:
    """Left side to right side through open edges of the rectangle the masks describe."""
    n, rows = h_open.shape
    ds = DisjointSet((n + 1) * rows)
    left, right = ds.add(), ds.add()
    for y in range(rows):
        ds.union(y, left)
        ds.union(n * rows + y, right)
    _union_open(ds, h_open, v_open)
    return ds.connected(left, right)


def has_crossing(field: WeightField, spec: CrossingSpec) -> bool:
    if spec.p >= 1.0:
        return True
    if spec.p <= 0.0:
        return False
    return crossing_from_masks(*rectangle_open_masks(field, spec.width, spec.height, spec.p))


def crossing_threshold(field: WeightField, n: int, m: int) -> float:
    """Smallest p at which ``[0, n] x [0, m]`` is crossed: the minimax weight of a crossing.

    Edges are added in increasing weight order until the two sides join, so the
    crossing event at any p is ``threshold < p``.
    """
    rows = m + 1
    hx, hy = np.meshgrid(np.arange(n), np.arange(rows), indexing="ij")
    vx, vy = np.meshgrid(np.arange(n + 1), np.arange(m), indexing="ij")
    src = np.concatenate([(hx * rows + hy).ravel(), (vx * rows + vy).ravel()])
    dst = np.concatenate([((hx + 1) * rows + hy).ravel(), (vx * rows + vy + 1).ravel()])
    weights = np.concatenate(
        [field.horizontal_grid(0, 0, n, rows).ravel(), field.vertical_grid(0, 0, n + 1, m).ravel()]
    )
    ds = DisjointSet((n + 1) * rows)
    left, right = ds.add(), ds.add()
    for y in range(rows):
        ds.union(y, left)
        ds.union(n * rows + y, right)
    for idx in np.argsort(weights, kind="stable"):
        if ds.union(int(src[idx]), int(dst[idx])) and ds.connected(left, right):
            return float(weights[idx])
    raise AssertionError("a full rectangle is always crossed")


def _threshold_task(master: int, n: int, m: int, replica: int) -> float:
    return crossing_threshold(WeightField(Seed(master, replica)), n, m)


def _crossing_task(master: int, spec: CrossingSpec, replica: int) -> bool:
    return has_crossing(WeightField(Seed(master, replica)), spec)


def crossing_probability(
    n: int,
    m: int,
    p: float,
    replicas: int,
    master_seed: int = 0,
    threads: int = 1,
) -> CrossingEstimate:
    """Monte Carlo σ̂(n, m, p) with binomial standard error."""
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    spec = CrossingSpec(n, m, p)
    hits = sum(replica_map(partial(_crossing_task, master_seed, spec), range(replicas), threads))
    value = hits / replicas
    return CrossingEstimate(n, m, p, replicas, value, binomial_stderr(value, replicas))


class CrossingSampler:
    """Crossing thresholds per rectangle, cached, on replicas ``0..replicas-1``.

    Because replica i always reads the stream ``Seed(master_seed, i)``, every σ̂
    served here is coupled across p and across rectangle sizes.
    """

    def __init__(self, master_seed: int, replicas: int, threads: int = 1) -> None:
        if replicas < 1:
            raise ValueError("replicas must be >= 1")
        self.master_seed = master_seed
        self.replicas = replicas
        self.threads = threads
        self._cache: dict[tuple[int, int], np.ndarray] = {}

    def thresholds(self, n: int, m: int | None = None) -> np.ndarray:
        m = n if m is None else m
        key = (n, m)
        if key not in self._cache:
            logger.debug("Sampling %d crossing thresholds of %dx%d", self.replicas, n, m)
            task = partial(_threshold_task, self.master_seed, n, m)
            self._cache[key] = np.fromiter(
                replica_map(task, range(self.replicas), self.threads), dtype=np.float64, count=self.replicas
            )
        return self._cache[key]

    def sigma(self, n: int, p: float, m: int | None = None) -> CrossingEstimate:
        _check_p(p)
        thr = self.thresholds(n, m)
        value = float(np.mean(thr < p))
        return CrossingEstimate(n, n if m is None else m, p, self.replicas, value, binomial_stderr(value, self.replicas))


# ------------------------------------------------------------------- annuli


def open_circuit_from_masks(h_open: np.ndarray, v_open: np.ndarray, m: int, n: int) -> bool:
    """Open circuit around the origin inside ``Ann(m, n)`` given ``B(n)`` masks.

    Dual vertices are the plaquettes ``[i, i+1] x [j, j+1]`` for ``i, j`` in
    ``[-n-1, n]``. Two neighbouring plaquettes are joined unless the primal edge
    between them is an open annulus edge. The circuit exists iff the plaquette
    next to the origin cannot reach the plaquettes outside ``B(n)``.
    """
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    side = 2 * n + 2

    def inside(x: int, y: int) -> bool:
        return m < max(abs(x), abs(y)) <= n

    def pid(i: int, j: int) -> int:
        return (i + n + 1) * side + (j + n + 1)

    ds = DisjointSet(side * side)
    outer = ds.add()
    for i in range(-n - 1, n + 1):
        for j in range(-n - 1, n + 1):
            here = pid(i, j)
            if i in (-n - 1, n) or j in (-n - 1, n):
                ds.union(here, outer)
            if i < n and not (inside(i + 1, j) and inside(i + 1, j + 1) and v_open[i + 1 + n, j + n]):
                ds.union(here, pid(i + 1, j))
            if j < n and not (inside(i, j + 1) and inside(i + 1, j + 1) and h_open[i + n, j + 1 + n]):
                ds.union(here, pid(i, j + 1))
    return not ds.connected(pid(0, 0), outer)


def open_crossing_from_masks(h_open: np.ndarray, v_open: np.ndarray, m: int, n: int) -> bool:
    """Open path inside ``Ann(m, n)`` from a site of norm ``m + 1`` to one of norm ``n``."""
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    return _terminal_connection(h_open, v_open, n, lambda d: d == m + 1, lambda d: d == n, lambda d: d > m)


def connects_from_masks(h_open: np.ndarray, v_open: np.ndarray, inner: Box, radius: int) -> bool:
    """Open path in ``B(radius)`` from a site of *inner* to the boundary ``|s| = radius``."""
    rows = 2 * radius + 1
    ds = DisjointSet(rows * rows)
    src, dst = ds.add(), ds.add()
    for i in range(rows):
        for j in range(rows):
            x, y = i - radius, j - radius
            if inner.contains((x, y)):
                ds.union(i * rows + j, src)
            if max(abs(x), abs(y)) == radius:
                ds.union(i * rows + j, dst)
    _union_open(ds, h_open, v_open)
    return ds.connected(src, dst)


def _terminal_connection(h_open, v_open, n, is_source, is_target, allowed) -> bool:
    rows = 2 * n + 1
    ds = DisjointSet(rows * rows)
    src, dst = ds.add(), ds.add()
    for i in range(rows):
        for j in range(rows):
            d = max(abs(i - n), abs(j - n))
            if is_source(d):
                ds.union(i * rows + j, src)
            if is_target(d):
                ds.union(i * rows + j, dst)
    _union_open(ds, h_open, v_open, keep=lambda s: allowed(max(abs(s[0] - n), abs(s[1] - n))))
    return ds.connected(src, dst)


def open_circuit_in_annulus(field: WeightField, p: float, m: int, n: int) -> bool:
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    _check_p(p)
    if p >= 1.0:
        return True
    if p <= 0.0:
        return False
    return open_circuit_from_masks(*box_open_masks(field, p, n), m, n)


def closed_dual_circuit_in_annulus(field: WeightField, p: float, m: int, n: int) -> bool:
    """Closed dual circuit around the origin in ``Ann(m, n)``: no open primal crossing of it."""
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    _check_p(p)
    if p >= 1.0:
        return False
    if p <= 0.0:
        return True
    return not open_crossing_from_masks(*box_open_masks(field, p, n), m, n)


def connects_to_radius(field: WeightField, p: float, inner: Box, radius: int) -> bool:
    reach = inner.radius + max(abs(inner.center.x), abs(inner.center.y))
    if reach > radius:
        raise ValueError(f"inner box reaches norm {reach}, outside B({radius})")
    _check_p(p)
    if p >= 1.0:
        return True
    if reach == radius:
        return True
    if p <= 0.0:
        return False
    return connects_from_masks(*box_open_masks(field, p, radius), inner, radius)


_EVENTS = {
    "open_circuit": open_circuit_in_annulus,
    "closed_dual_circuit": closed_dual_circuit_in_annulus,
}


def _event_task(master: int, event: str, p: float, m: int, n: int, replica: int) -> bool:
    return _EVENTS[event](WeightField(Seed(master, replica)), p, m, n)


def event_probability(
    event: str,
    p: float,
    m: int,
    n: int,
    replicas: int,
    master_seed: int = 0,
    threads: int = 1,
) -> tuple[float, float]:
    """P̂ of ``open_circuit`` or ``closed_dual_circuit`` in ``Ann(m, n)`` with its stderr."""
    if event not in _EVENTS:
        raise ValueError(f"unknown annulus event {event!r}; choose from {sorted(_EVENTS)}")
    hits = sum(replica_map(partial(_event_task, master_seed, event, p, m, n), range(replicas), threads))
    value = hits / replicas
    return value, binomial_stderr(value, replicas)


# ------------------------------------------------------- correlation length, p_n


def correlation_length(
    p: float,
    epsilon: float,
    replicas_per_probe: int,
    master_seed: int = 7,
    n_max: int = 4096,
    threads: int = 1,
    sampler: CrossingSampler | None = None,
) -> CorrelationLength:
    """Smallest probed n with σ̂(n, n, p) >= 1 - ε.

    Sides 1, 2, 4, ... are probed until one qualifies, then the gap to the previous
    power is bisected. The estimate is flagged unconfident when σ̂ at L̂ or at
    L̂ - 1 lies within two standard errors of the target.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon={epsilon} outside (0, 1)")
    _check_p(p)
    sampler = sampler or CrossingSampler(master_seed, replicas_per_probe, threads)
    target = 1.0 - epsilon
    probes: dict[int, CrossingEstimate] = {}

    def probe(n: int) -> bool:
        if n not in probes:
            probes[n] = sampler.sigma(n, p)
        return probes[n].value >= target

    n, failed = 1, None
    while not probe(n):
        failed = n
        n *= 2
        if n > n_max:
            raise ExhaustionError(n_max, target)
    if failed is not None:
        lo, hi = failed, n
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if probe(mid):
                hi = mid
            else:
                lo = mid
        n = hi

    def near(k: int) -> bool:
        est = probes.get(k) or sampler.sigma(k, p)
        return abs(est.value - target) <= 2 * est.stderr

    confident = not near(n) and (n == 1 or not near(n - 1))
    logger.debug("L(p=%.4f, eps=%.3f) = %d (confident=%s)", p, epsilon, n, confident)
    return CorrelationLength(p, epsilon, n, confident, sampler.replicas, dict(sorted(probes.items())))


def correlation_length_ratio(
    p: float,
    epsilon_1: float,
    epsilon_2: float,
    replicas_per_probe: int,
    master_seed: int = 7,
    n_max: int = 4096,
    threads: int = 1,
) -> tuple[CorrelationLength, CorrelationLength, float]:
    """L̂(p, ε1), L̂(p, ε2) and their ratio, on one shared sampler."""
    sampler = CrossingSampler(master_seed, replicas_per_probe, threads)
    first = correlation_length(p, epsilon_1, replicas_per_probe, n_max=n_max, sampler=sampler)
    second = correlation_length(p, epsilon_2, replicas_per_probe, n_max=n_max, sampler=sampler)
    return first, second, first.length / second.length


def p_n_estimate(
    n: int,
    epsilon: float,
    replicas: int,
    tolerance: float = 1e-3,
    master_seed: int = 7,
    threads: int = 1,
    sampler: CrossingSampler | None = None,
    level: float = 0.95,
) -> PnEstimate:
    """Bisection in p for σ̂(n, n, p) = 1 - ε.

    The interval comes from order statistics of the crossing thresholds: the
    ``1 - ε`` quantile index plus or minus a normal binomial margin.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon={epsilon} outside (0, 1)")
    sampler = sampler or CrossingSampler(master_seed, replicas, threads)
    thr = np.sort(sampler.thresholds(n))
    target = 1.0 - epsilon

    def sigma(p: float) -> float:
        return float(np.searchsorted(thr, p, side="left")) / thr.size

    upper = 1.0 - tolerance
    if sigma(upper) < target:
        raise BracketingError(upper, sigma(upper), target)
    lo, hi = 0.0, upper
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if sigma(mid) >= target:
            hi = mid
        else:
            lo = mid
    p_hat = 0.5 * (lo + hi)

    size = thr.size
    z = float(sps.norm.ppf(0.5 + level / 2.0))
    margin = z * math.sqrt(size * target * (1.0 - target))
    k = math.ceil(target * size) - 1
    i_lo = int(np.clip(math.floor(k - margin), 0, size - 1))
    i_hi = int(np.clip(math.ceil(k + margin), 0, size - 1))
    ci_lo, ci_hi = min(float(thr[i_lo]), p_hat), max(float(thr[i_hi]), p_hat)
    return PnEstimate(n, epsilon, p_hat, ci_lo, ci_hi, size)


def pn_log_ratio_fit(estimates: list[PnEstimate], p_c: float = P_C) -> PnScaling:
    """Fit ``log(p̂_n - p_c)`` against ``log n``; pairwise ratios are
    ``|log((p̂_m - p_c)/(p̂_n - p_c))| / |log(m/n)|``."""
    usable = [e for e in estimates if e.p_hat > p_c]
    if len(usable) < 2:
        raise ValueError("need at least two estimates above p_c")
    x = np.log([e.n for e in usable])
    y = np.log([e.p_hat - p_c for e in usable])
    ratios: dict[tuple[int, int], float] = {}
    for a in range(len(usable)):
        for b in range(a + 1, len(usable)):
            if usable[a].n != usable[b].n:
                ratios[(usable[a].n, usable[b].n)] = float(abs(y[b] - y[a]) / abs(x[b] - x[a]))
    return PnScaling(linear_fit(x, y), ratios)


def circuit_decay_profile(
    p: float,
    radii: list[int],
    replicas: int,
    master_seed: int = 7,
    length: int | None = None,
    epsilon: float = 0.25,
    threads: int = 1,
) -> CircuitDecay:
    """P̂(closed dual circuit in ``Ann(n, 2n)``) against ``n / L̂(p)``.

    A closed dual circuit of radius at least n is what stops a p-open cluster at
    scale n; above p_c its probability should decay exponentially in ``n / L(p)``.
    """
    if length is None:
        length = correlation_length(p, epsilon, replicas, master_seed, threads=threads).length
    probs, errs = [], []
    for r in radii:
        value, se = event_probability("closed_dual_circuit", p, r, 2 * r, replicas, master_seed, threads)
        probs.append(value)
        errs.append(se)
    x = np.array(radii, dtype=np.float64) / length
    fit = None
    if sum(1 for v in probs if v > 0) >= 2:
        fit = loglinear_fit(x, np.array(probs), np.array(errs))
    return CircuitDecay(p, length, tuple(radii), tuple(probs), tuple(errs), fit)


# ------------------------------------------------------------------- tables


def write_sigma_table(path: Path, header: dict, estimates: list[CrossingEstimate], epsilon: float) -> Path:
    rows = [(e.n, e.p, epsilon, e.replicas, f"{e.value:.6f}", f"{e.stderr:.6f}") for e in estimates]
    return write_csv(path, header, ("n", "p", "epsilon", "replicas", "sigma_hat", "stderr"), rows)


def write_pn_table(path: Path, header: dict, estimates: list[PnEstimate]) -> Path:
    rows = [(e.n, e.epsilon, f"{e.p_hat:.6f}", f"{e.ci_lo:.6f}", f"{e.ci_hi:.6f}") for e in estimates]
    return write_csv(path, header, ("n", "epsilon", "p_n_hat", "ci_lo", "ci_hi"), rows)
