"""Statistical building blocks: mergeable moments, KS tests, bootstrap, fits."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats as sps

__all__ = [
    "RunningMoments",
    "KsResult",
    "LinearFit",
    "ks_normal",
    "bootstrap_ci",
    "linear_fit",
    "loglinear_fit",
    "band_ratio",
    "binomial_stderr",
]


@dataclass
class RunningMoments:
    """Count, mean and centred sum of squares of a stream of vectors.

    Updates follow Welford; :meth:`merge` is the pairwise (Chan et al.) combination,
    so partial folds over disjoint replica ranges can be merged in any grouping.
    """

    dim: int
    count: int = 0
    mean: np.ndarray = field(default=None)  # type: ignore[assignment]
    m2: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.mean is None:
            self.mean = np.zeros(self.dim)
        if self.m2 is None:
            self.m2 = np.zeros(self.dim)

    def update(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=np.float64)
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (x - self.mean)

    def merge(self, other: RunningMoments) -> RunningMoments:
        if other.dim != self.dim:
            raise ValueError("cannot merge moments of different dimension")
        n = self.count + other.count
        if n == 0:
            return RunningMoments(self.dim)
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / n)
        m2 = self.m2 + other.m2 + delta**2 * (self.count * other.count / n)
        return RunningMoments(self.dim, n, mean, m2)

    def variance(self, ddof: int = 1) -> np.ndarray:
        if self.count - ddof <= 0:
            return np.full(self.dim, np.nan)
        return self.m2 / (self.count - ddof)

    def stderr(self) -> np.ndarray:
        return np.sqrt(self.variance() / max(self.count, 1))


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float
    size: int


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    slope_stderr: float
    ci_lo: float
    ci_hi: float
    points: int

    @property
    def excludes_zero(self) -> bool:
        return bool(np.isfinite(self.ci_lo) and np.isfinite(self.ci_hi) and (self.ci_hi < 0 or self.ci_lo > 0))


def binomial_stderr(p_hat: float, n: int) -> float:
    return float(np.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n)) if n > 0 else float("nan")


def ks_normal(samples: np.ndarray) -> KsResult:
    """One-sample KS test of *samples* against N(0, 1)."""
    samples = np.asarray(samples, dtype=np.float64)
    res = sps.kstest(samples, "norm")
    return KsResult(float(res.statistic), float(res.pvalue), int(samples.size))


def bootstrap_ci(
    samples: np.ndarray,
    statistic: Callable[[np.ndarray], float],
    resamples: int = 1000,
    seed: int = 0,
    level: float = 0.95,
) -> tuple[float, float]:
    """Percentile bootstrap interval of ``statistic`` over rows of *samples*."""
    samples = np.asarray(samples)
    n = samples.shape[0]
    if n == 0:
        return (float("nan"), float("nan"))
    rng = np.random.default_rng(seed)
    values = np.empty(resamples)
    for b in range(resamples):
        values[b] = statistic(samples[rng.integers(0, n, size=n)])
    tail = (1.0 - level) / 2.0
    lo, hi = np.nanquantile(values, [tail, 1.0 - tail])
    return float(lo), float(hi)


def linear_fit(
    x: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray | None = None,
    level: float = 0.95,
) -> LinearFit:
    """Weighted least squares ``y = intercept + slope * x`` with a t-interval on the slope."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=np.float64)
    if x.size < 2:
        raise ValueError("a line needs at least two points")
    design = np.column_stack([np.ones_like(x), x])
    xtw = design.T * w
    gram = xtw @ design
    beta = np.linalg.solve(gram, xtw @ y)
    dof = x.size - 2
    if dof <= 0:
        return LinearFit(float(beta[1]), float(beta[0]), float("nan"), float("-inf"), float("inf"), int(x.size))
    resid = y - design @ beta
    s2 = float(np.sum(w * resid**2) / dof)
    cov = s2 * np.linalg.inv(gram)
    se = float(np.sqrt(max(cov[1, 1], 0.0)))
    t = float(sps.t.ppf(0.5 + level / 2.0, dof))
    return LinearFit(float(beta[1]), float(beta[0]), se, float(beta[1] - t * se), float(beta[1] + t * se), int(x.size))


def loglinear_fit(
    x: np.ndarray,
    y: np.ndarray,
    stderr: np.ndarray | None = None,
    level: float = 0.95,
) -> LinearFit:
    """Fit ``log y`` against *x*, dropping non-positive y.

    With *stderr* given the points are weighted by ``(y / stderr)^2``, the inverse
    delta-method variance of ``log y``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    keep = y > 0
    weights = None
    if stderr is not None:
        se = np.asarray(stderr, dtype=np.float64)
        keep &= se > 0
        weights = (y[keep] / se[keep]) ** 2
    return linear_fit(x[keep], np.log(y[keep]), weights, level)


def band_ratio(values: np.ndarray) -> float:
    """max/min of *values*; infinite when the minimum is not positive."""
    values = np.asarray(values, dtype=np.float64)
    values = values[np.isfinite(values)]
    if values.size == 0:
        return float("nan")
    lo = float(values.min())
    return float(values.max() / lo) if lo > 0 else float("inf")
