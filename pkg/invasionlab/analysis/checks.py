"""Statistical checks of the outlet-count limit laws on an ensemble.

Every check works from plug-in estimates: Â stands in for the exact mean a(k),
T_n is taken from Â and σ̂_n from the sample spread of O(T_n). Asymptotic
"comparable to" statements are reported as tables; turning them into pass/fail
bands is left to :mod:`invasionlab.claims`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from invasionlab.analysis.ensemble import EnsembleDataset, Estimators, estimate_moments
from invasionlab.analysis.stats import KsResult, LinearFit, band_ratio, bootstrap_ci, ks_normal, loglinear_fit
from invasionlab.core.errors import (
    DegenerateVarianceError,
    InsufficientDataError,
    TooManyExclusionsError,
    UncertifiedRegionError,
)
from invasionlab.core.outlets import P_C

__all__ = [
    "CltVerdict",
    "SllnPath",
    "CovarianceDecay",
    "MomentTable",
    "MaximalTable",
    "DeviationTable",
    "InverseCltVerdict",
    "Ratio",
    "FluctuationRow",
    "SllnConsequences",
    "clt_verdict",
    "slln_path",
    "covariance_decay",
    "moment_bound_check",
    "maximal_inequality_check",
    "lower_deviation_check",
    "inverse_clt_verdict",
    "fluctuation_ratios",
    "slln_consequences",
    "q_minus_t_distribution",
]

logger = logging.getLogger(__name__)

MAX_EXCLUDED_FRACTION = 0.05


def _estimators(ds: EnsembleDataset, est: Estimators | None) -> Estimators:
    return est if est is not None else estimate_moments(ds)


def _check_scale(ds: EnsembleDataset, n: int) -> None:
    if not 1 <= n <= ds.n_max:
        raise UncertifiedRegionError(n, ds.n_max)


# --------------------------------------------------------------------- CLT


@dataclass(frozen=True)
class CltVerdict:
    n: int
    replicas: int
    jittered: KsResult
    plain: KsResult

    @property
    def statistic(self) -> float:
        return self.jittered.statistic

    @property
    def p_value(self) -> float:
        return self.jittered.p_value


def clt_verdict(ds: EnsembleDataset, n: int, seed: int = 0, est: Estimators | None = None) -> CltVerdict:
    """KS test of ``(O(n) - Â(n)) / b̂(n)`` against N(0, 1).

    O(n) lives on the integers, so the headline test first adds independent
    Uniform(-1/2, 1/2) jitter to each count; the unjittered test is reported too.
    """
    _check_scale(ds, n)
    est = _estimators(ds, est)
    b = math.sqrt(est.b2_hat[n - 1])
    if b == 0.0:
        raise DegenerateVarianceError(n)
    values = est.cumulative[:, n - 1]
    z = (values - est.A(n)) / b
    rng = np.random.default_rng(seed)
    jitter = rng.uniform(-0.5, 0.5, size=z.size) / b
    return CltVerdict(n, int(z.size), ks_normal(z + jitter), ks_normal(z))


# -------------------------------------------------------------------- SLLN


@dataclass(frozen=True)
class SllnPath:
    r: float
    replica: int
    scales: tuple[int, ...]
    deviations: tuple[float, ...]
    tail_max: tuple[float, ...]
    outside_range: bool


def slln_path(ds: EnsembleDataset, r: float, replica: int = 0, est: Estimators | None = None) -> SllnPath:
    """``|O(n) - Â(n)| / n^r`` along one replica, with the running tail maximum.

    ``tail_max[i]`` is the maximum over all recorded scales ``>= scales[i]``.
    """
    if r <= 0.5:
        logger.warning("r=%.3f <= 1/2 lies outside the almost-sure convergence range", r)
    est = _estimators(ds, est)
    scales = np.arange(1, ds.n_max + 1)
    dev = np.abs(est.cumulative[replica] - est.A_hat) / scales.astype(np.float64) ** r
    tail = np.maximum.accumulate(dev[::-1])[::-1]
    return SllnPath(
        r,
        ds.records[replica].replica,
        tuple(int(s) for s in scales),
        tuple(float(v) for v in dev),
        tuple(float(v) for v in tail),
        r <= 0.5,
    )


# ------------------------------------------------------------- covariance


@dataclass(frozen=True)
class CovarianceDecay:
    lags: tuple[int, ...]
    c_hat: tuple[float, ...]
    c_se: tuple[float, ...]
    fit: LinearFit | None
    noisy_lags: tuple[int, ...] = ()

    @property
    def rate(self) -> float | None:
        return self.fit.slope if self.fit is not None else None

    @property
    def precondition_met(self) -> bool:
        """Every lag has SE(ĉ(k)) < ĉ(0) / 10."""
        return not self.noisy_lags


def covariance_decay(ds: EnsembleDataset, k_max: int, est: Estimators | None = None) -> CovarianceDecay:
    """ĉ(k) = max over j of ``|Cov(X_j, X_{j+k})|`` for k = 0..k_max, with a log-linear fit.

    The standard error at each lag is that of the maximising pair's sample
    covariance, estimated from the spread of the centred products.
    """
    est = _estimators(ds, est)
    n_max = ds.n_max
    if not 0 < k_max < n_max:
        raise ValueError(f"k_max must lie in [1, {n_max - 1}]")
    x = est.residuals - est.residuals.mean(axis=0)
    size = x.shape[0]
    c_hat, c_se = [], []
    for k in range(k_max + 1):
        best, best_se = -1.0, 0.0
        for j in range(n_max - k):
            prod = x[:, j] * x[:, j + k]
            cov = float(prod.sum() / (size - 1))
            if abs(cov) > best:
                best = abs(cov)
                best_se = float(prod.std(ddof=1) / math.sqrt(size))
        c_hat.append(best)
        c_se.append(best_se)
    lags = np.arange(k_max + 1, dtype=np.float64)
    c_arr, se_arr = np.array(c_hat), np.array(c_se)
    fit = loglinear_fit(lags, c_arr, se_arr) if np.count_nonzero((c_arr > 0) & (se_arr > 0)) >= 2 else None
    noisy = tuple(int(k) for k in np.nonzero(se_arr >= c_arr[0] / 10)[0])
    if noisy:
        logger.warning(
            "Covariance standard errors reach c_hat(0)/10 = %.4g at lags %s; add replicas",
            c_arr[0] / 10,
            ", ".join(map(str, noisy)),
        )
    return CovarianceDecay(tuple(range(k_max + 1)), tuple(c_hat), tuple(c_se), fit, noisy)


# ----------------------------------------------------------------- moments


@dataclass(frozen=True)
class MomentTable:
    t: int
    moments: tuple[float, ...]
    ci_lo: tuple[float, ...]
    ci_hi: tuple[float, ...]
    windows: tuple[int, ...]
    partial_sums: tuple[float, ...]
    normalized: tuple[float, ...]

    @property
    def normalized_band(self) -> float:
        return band_ratio(np.array(self.normalized))


def moment_bound_check(
    ds: EnsembleDataset,
    t: int,
    windows: list[int],
    resamples: int = 1000,
    seed: int = 0,
    est: Estimators | None = None,
) -> MomentTable:
    """Ê O_k^t per scale, and ``max_k Ê|X_k + ... + X_{k+m}|^t / m^(t/2)`` per window m."""
    if t not in (1, 2, 3, 4):
        raise ValueError(f"moment order must be 1..4, got {t}")
    est = _estimators(ds, est)
    counts = ds.counts_matrix()
    powered = counts**t
    moments = powered.mean(axis=0)
    lo, hi = [], []
    for k in range(ds.n_max):
        a, b = bootstrap_ci(powered[:, k], np.mean, resamples, seed + k)
        lo.append(a)
        hi.append(b)
    sums, norm = [], []
    for m in windows:
        if not 1 <= m < ds.n_max:
            raise UncertifiedRegionError(m + 1, ds.n_max)
        best = 0.0
        for k in range(ds.n_max - m):
            window = est.residuals[:, k : k + m + 1].sum(axis=1)
            best = max(best, float(np.mean(np.abs(window) ** t)))
        sums.append(best)
        norm.append(best / m ** (t / 2.0))
    return MomentTable(
        t,
        tuple(float(v) for v in moments),
        tuple(lo),
        tuple(hi),
        tuple(windows),
        tuple(sums),
        tuple(norm),
    )


# ----------------------------------------------------------------- maximal


@dataclass(frozen=True)
class MaximalTable:
    n: int
    lambdas: tuple[float, ...]
    probabilities: tuple[float, ...]
    normalized: tuple[float, ...]
    fitted_c: float


def maximal_inequality_check(
    ds: EnsembleDataset,
    lambdas: list[float],
    n: int | None = None,
    est: Estimators | None = None,
) -> MaximalTable:
    """P̂(max_{i<=n} |X_1 + ... + X_i| >= λ) per λ.

    ``normalized`` is ``P̂ * min(λ²/n, λ/√n)``; ``fitted_c`` is the smallest C with
    ``P̂ <= C (n/λ² + √n/λ)`` across the positive grid points.
    """
    est = _estimators(ds, est)
    n = ds.n_max if n is None else n
    _check_scale(ds, n)
    running = np.abs(np.cumsum(est.residuals[:, :n], axis=1)).max(axis=1)
    probs, norm, ratios = [], [], []
    for lam in lambdas:
        p = float(np.mean(running >= lam))
        probs.append(p)
        if lam > 0:
            norm.append(p * min(lam**2 / n, lam / math.sqrt(n)))
            ratios.append(p / (n / lam**2 + math.sqrt(n) / lam))
        else:
            norm.append(0.0)
    return MaximalTable(n, tuple(lambdas), tuple(probs), tuple(norm), max(ratios, default=0.0))


# ------------------------------------------------------------ lower tail


@dataclass(frozen=True)
class DeviationTable:
    n: int
    rows: tuple[tuple[int, float, float], ...]

    def probability(self, m: int, alpha: float) -> float:
        for mm, a, p in self.rows:
            if mm == m and a == alpha:
                return p
        raise KeyError((m, alpha))


def lower_deviation_check(ds: EnsembleDataset, n: int, m_values: list[int], alphas: list[float]) -> DeviationTable:
    """P̂(O(n, n+m) <= αm) for every (m, α); a zero-width window has probability 1."""
    counts = ds.counts_matrix()
    rows = []
    for m in m_values:
        if m < 0:
            raise ValueError("window width must be non-negative")
        if n + m > ds.n_max:
            raise UncertifiedRegionError(n + m, ds.n_max)
        window = counts[:, n : n + m].sum(axis=1)
        for alpha in alphas:
            rows.append((m, alpha, float(np.mean(window <= alpha * m))))
    return DeviationTable(n, tuple(rows))


# ------------------------------------------------------------- inverse CLT


@dataclass(frozen=True)
class InverseCltVerdict:
    n: int
    ks: KsResult
    second_moment: float
    ci_lo: float
    ci_hi: float
    excluded: int
    total: int

    @property
    def p_value(self) -> float:
        return self.ks.p_value


def _q_values(ds: EnsembleDataset, n: int, max_excluded: float) -> tuple[np.ndarray, np.ndarray, int]:
    """Rows with Q_n recorded, their Q_n, and the exclusion count."""
    rows, qs = [], []
    for i, rec in enumerate(ds.records):
        if len(rec.q) >= n:
            rows.append(i)
            qs.append(rec.q[n - 1])
    excluded = len(ds) - len(rows)
    if excluded > max_excluded * len(ds):
        raise TooManyExclusionsError(excluded, len(ds), max_excluded)
    if not rows:
        raise InsufficientDataError(n, 0, what="replicas with Q_n")
    return np.array(rows, dtype=np.int64), np.array(qs, dtype=np.int64), excluded


def inverse_clt_verdict(
    ds: EnsembleDataset,
    n: int,
    *,
    resamples: int = 1000,
    seed: int = 0,
    max_excluded: float = MAX_EXCLUDED_FRACTION,
    use_t_index: bool = False,
    est: Estimators | None = None,
) -> InverseCltVerdict:
    """KS test and second moment of ``(Â(Q_n) - n) / σ̂_n``.

    ``use_t_index`` swaps Q_n for T_n, which makes the statistic a constant and
    serves as a control that the test can reject.
    """
    est = _estimators(ds, est)
    t_n = est.require_T(n)
    sigma = est.sigma(n)
    if sigma == 0.0:
        raise DegenerateVarianceError(t_n)
    _, qs, excluded = _q_values(ds, n, max_excluded)
    if use_t_index:
        qs = np.full_like(qs, t_n)
    z = (est.A_hat[qs - 1] - n) / sigma
    second = float(np.mean(z**2))
    lo, hi = bootstrap_ci(z, lambda s: float(np.mean(s**2)), resamples, seed)
    if excluded:
        logger.info("Inverse CLT at n=%d: %d of %d replicas excluded", n, excluded, len(ds))
    return InverseCltVerdict(n, ks_normal(z), second, lo, hi, excluded, len(ds))


# ------------------------------------------------------------- fluctuations


@dataclass(frozen=True)
class Ratio:
    value: float
    ci_lo: float
    ci_hi: float


@dataclass(frozen=True)
class FluctuationRow:
    n: int
    t_n: int
    q: Ratio
    q_centered: Ratio
    radius: Ratio | None
    radius_centered: Ratio | None
    weight: Ratio | None
    weight_centered: Ratio | None
    excluded: int


def _ratio(values: np.ndarray, n: int, resamples: int, seed: int, centered: bool = False) -> Ratio:
    if centered:

        def stat(s: np.ndarray) -> float:
            return float(np.mean((s - s.mean()) ** 2) / n)

    else:

        def stat(s: np.ndarray) -> float:
            return float(np.mean(s**2) / n)

    lo, hi = bootstrap_ci(values, stat, resamples, seed)
    return Ratio(stat(values), lo, hi)


def _log_deviations(
    ds: EnsembleDataset, rows: np.ndarray, n: int, t_n: int, pn_table: dict[int, float] | None, p_c: float
) -> tuple[np.ndarray | None, np.ndarray | None]:
    radius_dev = None
    if all(len(ds.records[i].radii) >= n for i in rows):
        radii = np.array([max(ds.records[i].radii[n - 1], 1) for i in rows], dtype=np.float64)
        radius_dev = np.log2(radii) - t_n
    weight_dev = None
    if (
        pn_table is not None
        and pn_table.get(t_n, 0.0) > p_c
        and all(len(ds.records[i].weights) >= n for i in rows)
    ):
        taus = np.array([ds.records[i].weights[n - 1] for i in rows], dtype=np.float64)
        weight_dev = np.log2((taus - p_c) / (pn_table[t_n] - p_c))
    return radius_dev, weight_dev


def fluctuation_ratios(
    ds: EnsembleDataset,
    n: int,
    pn_table: dict[int, float] | None = None,
    *,
    p_c: float = P_C,
    resamples: int = 1000,
    seed: int = 0,
    max_excluded: float = MAX_EXCLUDED_FRACTION,
    est: Estimators | None = None,
) -> FluctuationRow:
    """``Ê(Q_n - T_n)²/n``, ``Ê(log₂ R̂_n - T_n)²/n`` and the outlet-weight ratio.

    *pn_table* maps k to p̂ at side ``2^k``; without an entry for T_n the weight
    ratio is omitted. Radii below 1 are read as 1 before taking logarithms.
    """
    est = _estimators(ds, est)
    t_n = est.require_T(n)
    rows, qs, excluded = _q_values(ds, n, max_excluded)
    q_dev = qs.astype(np.float64) - t_n
    radius_dev, weight_dev = _log_deviations(ds, rows, n, t_n, pn_table, p_c)
    radius = radius_centered = weight = weight_centered = None
    if radius_dev is not None:
        radius = _ratio(radius_dev, n, resamples, seed + 1)
        radius_centered = _ratio(radius_dev, n, resamples, seed + 4, centered=True)
    if weight_dev is not None:
        weight = _ratio(weight_dev, n, resamples, seed + 2)
        weight_centered = _ratio(weight_dev, n, resamples, seed + 5, centered=True)
    return FluctuationRow(
        n=n,
        t_n=t_n,
        q=_ratio(q_dev, n, resamples, seed),
        q_centered=_ratio(q_dev, n, resamples, seed + 3, centered=True),
        radius=radius,
        radius_centered=radius_centered,
        weight=weight,
        weight_centered=weight_centered,
        excluded=excluded,
    )


@dataclass(frozen=True)
class SllnConsequences:
    r: float
    replica: int
    scales: tuple[int, ...]
    q: tuple[float, ...]
    radius: tuple[float, ...]
    weight: tuple[float, ...] | None


def slln_consequences(
    ds: EnsembleDataset,
    r: float,
    replica: int = 0,
    pn_table: dict[int, float] | None = None,
    *,
    p_c: float = P_C,
    est: Estimators | None = None,
) -> SllnConsequences:
    """Per-n values of ``(Q_n - T_n)/n^r``, ``(log₂ R̂_n - T_n)/n^r`` and the weight log ratio over n^r.

    Scales run over n = 1.. as long as the replica has Q_n and T_n is defined.
    """
    if r <= 0.5:
        logger.warning("r=%.3f <= 1/2 lies outside the almost-sure convergence range", r)
    est = _estimators(ds, est)
    rec = ds.records[replica]
    scales, q_vals, r_vals, w_vals = [], [], [], []
    use_weights = pn_table is not None
    for n in range(1, rec.j_max + 1):
        t_n = est.T(n)
        if t_n is None:
            break
        scale = n**r
        scales.append(n)
        q_vals.append((rec.q[n - 1] - t_n) / scale)
        if len(rec.radii) >= n:
            r_vals.append((math.log2(max(rec.radii[n - 1], 1)) - t_n) / scale)
        if use_weights:
            pn = pn_table.get(t_n) if pn_table else None
            if pn is None or pn <= p_c or len(rec.weights) < n:
                use_weights = False
            else:
                w_vals.append(math.log2((rec.weights[n - 1] - p_c) / (pn - p_c)) / scale)
    return SllnConsequences(
        r,
        rec.replica,
        tuple(scales),
        tuple(q_vals),
        tuple(r_vals),
        tuple(w_vals) if use_weights else None,
    )


def q_minus_t_distribution(ds: EnsembleDataset, n: int, est: Estimators | None = None) -> np.ndarray:
    """``(Q_n - T_n)/√n`` over the replicas that reach n outlets."""
    est = _estimators(ds, est)
    t_n = est.require_T(n)
    qs = np.array([rec.q[n - 1] for rec in ds.records if len(rec.q) >= n], dtype=np.float64)
    return (qs - t_n) / math.sqrt(n)
