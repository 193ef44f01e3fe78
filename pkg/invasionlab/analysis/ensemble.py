"""Replica ensembles of full invasion runs and the moment estimators built on them.

Replica i always runs on ``WeightField(Seed(master_seed, i))``. Records are written
to a headed JSONL file in replica order, one line per replica, so an interrupted
run resumes from the first missing index and produces the same bytes as an
uninterrupted one.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Callable, Iterable

import numpy as np

from invasionlab.analysis.stats import LinearFit, RunningMoments, binomial_stderr, loglinear_fit
from invasionlab.core.errors import InsufficientDataError, ResourceLimitError
from invasionlab.core.invasion import DEFAULT_HARD_CAP, InvasionConfig, InvasionTrace, invade, truncated_invasion
from invasionlab.core.lattice import Annulus, edge_from_key, edge_in_region
from invasionlab.core.outlets import P_C, decompose, extract_outlets, q_index
from invasionlab.core.weightfield import MIXER_VERSION, Seed, WeightField
from invasionlab.utils.output import append_jsonl, provenance, read_jsonl, start_jsonl, write_csv
from invasionlab.utils.pool import replica_map

__all__ = [
    "ReplicaRecord",
    "EnsembleDataset",
    "Estimators",
    "RenewalEstimate",
    "RenewalProfile",
    "run_replica",
    "run_ensemble",
    "estimate_moments",
    "renewal_disagreement",
    "renewal_profile",
    "write_estimator_table",
    "header_for",
]

logger = logging.getLogger(__name__)

_MOMENT_CHUNK = 64


@dataclass
class ReplicaRecord:
    """Everything one replica contributes to the ensemble.

    ``counts[k-1]`` is O_k and ``certified[k-1]`` its certification flag. The lists
    ``radii``, ``weights`` and ``q`` hold R̂_j, τ̂_j and Q_j for every j up to the
    number of outlets counted in annuli ``1..n_max``.
    """

    replica: int
    counts: list[float]
    certified: list[bool]
    radii: list[int] = field(default_factory=list)
    weights: list[float] = field(default_factory=list)
    q: list[int] = field(default_factory=list)
    pond_sizes: list[int] = field(default_factory=list)
    invaded: int = 0

    def to_json(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> ReplicaRecord:
        return cls(**data)

    @property
    def j_max(self) -> int:
        return len(self.q)


def _q_from_counts(counts: Iterable[float]) -> list[int]:
    q: list[int] = []
    total = 0
    for k, c in enumerate(counts, start=1):
        total += int(c)
        while len(q) < total:
            q.append(k)
    return q


@dataclass
class EnsembleDataset:
    header: dict[str, Any]
    records: list[ReplicaRecord]

    @property
    def n_max(self) -> int:
        return int(self.header["n_max"])

    @property
    def buffer(self) -> int:
        return int(self.header.get("buffer", 0))

    @property
    def master_seed(self) -> int | None:
        return self.header.get("master_seed")

    def __len__(self) -> int:
        return len(self.records)

    def counts_matrix(self) -> np.ndarray:
        """O_k per replica, shape ``(replicas, n_max)``."""
        return np.array([r.counts for r in self.records], dtype=np.float64).reshape(len(self.records), self.n_max)

    def cumulative_matrix(self) -> np.ndarray:
        """O(n) per replica, shape ``(replicas, n_max)``."""
        return np.cumsum(self.counts_matrix(), axis=1)

    def validate(self) -> list[str]:
        problems = []
        seeds = [r.replica for r in self.records]
        if len(set(seeds)) != len(seeds):
            problems.append("replica indices are not distinct")
        for r in self.records:
            if len(r.counts) != self.n_max:
                problems.append(f"replica {r.replica} has {len(r.counts)} counts, expected {self.n_max}")
            if not all(r.certified):
                problems.append(f"replica {r.replica} carries uncertified counts")
        return problems

    @classmethod
    def load(cls, path: Path) -> EnsembleDataset:
        header, rows = read_jsonl(path)
        return cls(header, [ReplicaRecord.from_json(row) for row in rows])

    @classmethod
    def from_counts(
        cls,
        counts: np.ndarray,
        radii: np.ndarray | None = None,
        weights: np.ndarray | None = None,
        **header: Any,
    ) -> EnsembleDataset:
        """Dataset from a ``(replicas, n_max)`` matrix of counts, for synthetic laws.

        Q_j is derived from integer counts; R̂_j and τ̂_j are taken from the optional
        matrices (rows padded with NaN past a replica's j_max are truncated).
        """
        counts = np.asarray(counts)
        records = []
        for i, row in enumerate(counts):
            integral = bool(np.all(np.equal(np.mod(row, 1), 0)))
            q = _q_from_counts(row) if integral else []
            rec = ReplicaRecord(
                replica=i,
                counts=[float(c) for c in row],
                certified=[True] * counts.shape[1],
                q=q,
            )
            if radii is not None:
                rec.radii = [int(v) for v in np.asarray(radii[i])[: len(q)]]
            if weights is not None:
                rec.weights = [float(v) for v in np.asarray(weights[i])[: len(q)]]
            records.append(rec)
        base = {"n_max": counts.shape[1], "buffer": 0, "master_seed": None, "synthetic": True}
        base.update(header)
        return cls(base, records)


def run_replica(
    master_seed: int,
    n_max: int,
    buffer: int,
    replica: int,
    hard_cap: int = DEFAULT_HARD_CAP,
    p_threshold: float = P_C,
) -> ReplicaRecord:
    """One full invasion to radius ``2^(n_max + buffer)``, decomposed."""
    field_ = WeightField(Seed(master_seed, replica))
    cfg = InvasionConfig(field=field_, stop_radius=2 ** (n_max + buffer), hard_cap=hard_cap)
    try:
        trace = invade(cfg)
    except ResourceLimitError as exc:
        raise exc.with_replica(replica) from exc
    dec = decompose(trace, extract_outlets(trace, p_threshold), buffer=buffer, p_threshold=p_threshold)
    counts = [dec.counts[k] for k in range(1, n_max + 1)]
    j_max = min(sum(counts), len(dec.outlets))
    return ReplicaRecord(
        replica=replica,
        counts=[float(c) for c in counts],
        certified=[dec.certified_scale is not None and k <= dec.certified_scale for k in range(1, n_max + 1)],
        radii=dec.radii[:j_max],
        weights=dec.outlet_weights[:j_max],
        q=[q_index(dec, j) for j in range(1, j_max + 1)],
        pond_sizes=dec.pond_sizes[:j_max],
        invaded=len(trace),
    )


def run_ensemble(
    master_seed: int,
    replicas: int,
    n_max: int,
    buffer: int,
    path: Path | None = None,
    *,
    resume: bool = False,
    threads: int = 1,
    hard_cap: int = DEFAULT_HARD_CAP,
    p_threshold: float = P_C,
    config_hash: str = "",
    on_record: Callable[[ReplicaRecord], None] | None = None,
) -> EnsembleDataset:
    """Run (or finish) an ensemble, appending each record to *path* as it lands."""
    if replicas < 1 or n_max < 1:
        raise ValueError("replicas and n_max must be positive")
    if buffer < 4:
        raise ValueError(f"buffer must be >= 4, got {buffer}")
    header = provenance(
        config_hash,
        master_seed,
        n_max=n_max,
        buffer=buffer,
        p_threshold=p_threshold,
        stop_radius=2 ** (n_max + buffer),
    )
    records: list[ReplicaRecord] = []
    if path is not None and resume and path.is_file():
        old_header, rows = read_jsonl(path)
        for key in ("master_seed", "n_max", "buffer", "p_threshold", "mixer"):
            if old_header.get(key) != header.get(key):
                raise ValueError(f"cannot resume {path}: {key} was {old_header.get(key)!r}, now {header.get(key)!r}")
        records = [ReplicaRecord.from_json(row) for row in rows[:replicas]]
        header = old_header
        # rewrite without any torn tail line
        start_jsonl(path, header)
        for rec in records:
            append_jsonl(path, rec.to_json())
        logger.info("Resuming %s at replica %d of %d", path, len(records), replicas)
    elif path is not None:
        start_jsonl(path, header)

    task = partial(_replica_task, master_seed, n_max, buffer, hard_cap, p_threshold)
    for rec in replica_map(task, range(len(records), replicas), threads):
        records.append(rec)
        if path is not None:
            append_jsonl(path, rec.to_json())
        if on_record is not None:
            on_record(rec)
    return EnsembleDataset(header, records)


def _replica_task(master_seed: int, n_max: int, buffer: int, hard_cap: int, p_threshold: float, replica: int) -> ReplicaRecord:
    return run_replica(master_seed, n_max, buffer, replica, hard_cap, p_threshold)


# ------------------------------------------------------------------ estimators


@dataclass
class Estimators:
    """Plug-in moments of the outlet counts, indexed by scale ``k = 1..n_max``."""

    replicas: int
    a_hat: np.ndarray
    a_se: np.ndarray
    A_hat: np.ndarray
    A_se: np.ndarray
    b2_hat: np.ndarray
    b2_se: np.ndarray
    residuals: np.ndarray = field(repr=False)
    cumulative: np.ndarray = field(repr=False)

    @property
    def n_max(self) -> int:
        return int(self.a_hat.size)

    def a(self, k: int) -> float:
        return float(self.a_hat[k - 1])

    def A(self, n: int) -> float:
        return 0.0 if n == 0 else float(self.A_hat[n - 1])

    def T(self, n: int) -> int | None:
        """T_n = min{k : Â(k) >= n}, ``None`` past the recorded scales."""
        hit = np.nonzero(self.A_hat >= n)[0]
        return int(hit[0]) + 1 if hit.size else None

    def require_T(self, n: int) -> int:
        t = self.T(n)
        if t is None:
            raise InsufficientDataError(n, int(math.floor(self.A_hat[-1])), what="expected outlets")
        return t

    def sigma(self, n: int) -> float:
        """σ̂_n: sample standard deviation of O(T_n)."""
        return float(math.sqrt(self.b2_hat[self.require_T(n) - 1]))


def estimate_moments(ds: EnsembleDataset, chunk: int = _MOMENT_CHUNK) -> Estimators:
    """Means and variances of O_k and O(n), folded in replica chunks and merged."""
    if len(ds) < 2:
        raise InsufficientDataError(2, len(ds), what="replicas")
    counts = ds.counts_matrix()
    cumulative = np.cumsum(counts, axis=1)
    n_max = ds.n_max
    total = RunningMoments(2 * n_max)
    for start in range(0, len(ds), chunk):
        part = RunningMoments(2 * n_max)
        for row_c, row_s in zip(counts[start : start + chunk], cumulative[start : start + chunk]):
            part.update(np.concatenate([row_c, row_s]))
        total = total.merge(part)
    mean, var, se = total.mean, total.variance(), total.stderr()
    b2 = np.maximum(var[n_max:], 0.0)
    return Estimators(
        replicas=total.count,
        a_hat=mean[:n_max],
        a_se=se[:n_max],
        A_hat=mean[n_max:],
        A_se=se[n_max:],
        b2_hat=b2,
        b2_se=b2 * math.sqrt(2.0 / (total.count - 1)),
        residuals=counts - mean[:n_max],
        cumulative=cumulative,
    )


def write_estimator_table(path: Path, header: dict, est: Estimators) -> Path:
    rows = [
        (
            k,
            f"{est.a(k):.6f}",
            f"{est.a_se[k - 1]:.6f}",
            f"{est.A(k):.6f}",
            f"{est.b2_hat[k - 1]:.6f}",
            f"{est.b2_se[k - 1]:.6f}",
        )
        for k in range(1, est.n_max + 1)
    ]
    return write_csv(path, header, ("k", "a_hat", "a_se", "A_hat", "b2_hat", "b2_se"), rows)


# ------------------------------------------------------------------ renewal


@dataclass(frozen=True)
class RenewalEstimate:
    k: int
    l: int
    m: int
    replicas: int
    edges: float
    edges_se: float
    outlets: float
    outlets_se: float


@dataclass(frozen=True)
class RenewalProfile:
    estimates: tuple[RenewalEstimate, ...]
    fit: LinearFit | None


def _annulus_keys(keys: Iterable[int], region: Annulus) -> frozenset[int]:
    return frozenset(key for key in keys if edge_in_region(edge_from_key(key), region))


def _outlet_keys(trace: InvasionTrace, region: Annulus, p_threshold: float) -> frozenset[int]:
    return frozenset(
        int(trace.keys[o.step - 1]) for o in extract_outlets(trace, p_threshold) if edge_in_region(o.edge, region)
    )


def _renewal_task(
    master_seed: int,
    k: int,
    l: int,
    m: int,
    margin: int,
    hard_cap: int,
    p_threshold: float,
    replica: int,
) -> tuple[bool, bool]:
    field_ = WeightField(Seed(master_seed, replica))
    region = Annulus(2**k, 2 ** (k + l))
    try:
        full = invade(InvasionConfig(field=field_, stop_radius=2 ** (k + l + m + margin), hard_cap=hard_cap))
        cut = truncated_invasion(field_, k, l, m, hard_cap=hard_cap)
    except ResourceLimitError as exc:
        raise exc.with_replica(replica) from exc
    edges_differ = _annulus_keys(full.invaded_edges, region) != _annulus_keys(cut.invaded_edges, region)
    outlets_differ = _outlet_keys(full, region, p_threshold) != _outlet_keys(cut, region, p_threshold)
    return edges_differ, outlets_differ


def renewal_disagreement(
    master_seed: int,
    k: int,
    l: int,
    m: int,
    replicas: int,
    *,
    reference_margin: int = 2,
    threads: int = 1,
    hard_cap: int = DEFAULT_HARD_CAP,
    p_threshold: float = P_C,
) -> RenewalEstimate:
    """How often the truncated run G(k, l, m) and a full run disagree inside Ann(2^k, 2^(k+l)).

    The full run stops at radius ``2^(k+l+m+reference_margin)``; both runs of a
    replica read the same weight field. Disagreement is measured twice: on the
    invaded edge sets and on the outlet sets restricted to the annulus.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    if reference_margin < 0:
        raise ValueError("reference margin must be >= 0")
    task = partial(_renewal_task, master_seed, k, l, m, reference_margin, hard_cap, p_threshold)
    edge_hits = outlet_hits = 0
    for edges_differ, outlets_differ in replica_map(task, range(replicas), threads):
        edge_hits += edges_differ
        outlet_hits += outlets_differ
    pe, po = edge_hits / replicas, outlet_hits / replicas
    return RenewalEstimate(k, l, m, replicas, pe, binomial_stderr(pe, replicas), po, binomial_stderr(po, replicas))


def renewal_profile(
    master_seed: int,
    k: int,
    l: int,
    m_values: list[int],
    replicas: int,
    **kwargs: Any,
) -> RenewalProfile:
    """:func:`renewal_disagreement` over *m_values* with a log-linear fit in m."""
    estimates = tuple(renewal_disagreement(master_seed, k, l, m, replicas, **kwargs) for m in m_values)
    ms = np.array([e.m for e in estimates], dtype=np.float64)
    ps = np.array([e.edges for e in estimates])
    se = np.array([e.edges_se for e in estimates])
    fit = loglinear_fit(ms, ps, se) if np.count_nonzero((ps > 0) & (se > 0)) >= 2 else None
    return RenewalProfile(estimates, fit)


def header_for(ds: EnsembleDataset) -> dict[str, Any]:
    """Provenance header for tables derived from *ds*."""
    return provenance(
        str(ds.header.get("config_hash", "")),
        ds.master_seed,
        n_max=ds.n_max,
        buffer=ds.buffer,
        mixer=ds.header.get("mixer", MIXER_VERSION),
    )
