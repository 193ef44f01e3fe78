"""Claims on the moments and tails of the outlet counts."""

from __future__ import annotations

import numpy as np

from invasionlab.analysis.checks import lower_deviation_check, maximal_inequality_check, moment_bound_check
from invasionlab.analysis.stats import band_ratio
from invasionlab.claims.base_claim import BaseClaim, ClaimVerdict, VerifyContext
from invasionlab.core.errors import UncertifiedRegionError

__all__ = [
    "MeanBandClaim",
    "VarianceGrowthClaim",
    "MomentBoundClaim",
    "MaximalInequalityClaim",
    "LowerDeviationClaim",
]


def _scales(ctx: VerifyContext, scales: list[int]) -> list[int]:
    for n in scales:
        if not 1 <= n <= ctx.dataset.n_max:
            raise UncertifiedRegionError(n, ctx.dataset.n_max)
    return scales


class MeanBandClaim(BaseClaim):
    claim_id = "mean-count-bounded"
    statement = "The mean number of outlets in the k-th dyadic annulus stays between two positive constants."

    def evaluate(self, ctx: VerifyContext) -> list[ClaimVerdict]:
        cfg = ctx.settings
        means = np.array([ctx.estimators.a(k) for k in _scales(ctx, cfg.mean_scales)])
        band = band_ratio(means)
        ok = bool(np.all(means > 0)) and band <= cfg.mean_ratio_band
        msg = f"a_hat over k={cfg.mean_scales}: " + ", ".join(f"{v:.3f}" for v in means)
        return [self.verdict(ok, band, cfg.mean_ratio_band, msg)]


class VarianceGrowthClaim(BaseClaim):
    claim_id = "variance-linear"
    statement = "The variance of the cumulative outlet count O(n) grows linearly in n."

    def evaluate(self, ctx: VerifyContext) -> list[ClaimVerdict]:
        cfg = ctx.settings
        ns = _scales(ctx, cfg.variance_scales)
        ratios = np.array([ctx.estimators.b2_hat[n - 1] / n for n in ns])
        band = band_ratio(ratios)
        msg = f"b2_hat(n)/n over n={ns}: " + ", ".join(f"{v:.3f}" for v in ratios)
        return [self.verdict(band <= cfg.variance_ratio_band, band, cfg.variance_ratio_band, msg)]


class MomentBoundClaim(BaseClaim):
    claim_id = "moments-bounded"
    statement = (
        "Every moment of O_k is bounded uniformly in k, and t-th moments of partial sums of "
        "centred counts over m annuli grow like m^(t/2)."
    )

    def evaluate(self, ctx: VerifyContext) -> list[ClaimVerdict]:
        cfg = ctx.settings
        scales = _scales(ctx, cfg.mean_scales)
        out = []
        for t in cfg.moment_orders:
            table = moment_bound_check(
                ctx.dataset, t, cfg.partial_sum_windows, ctx.resamples, ctx.seed, est=ctx.estimators
            )
            uniform = band_ratio(np.array([table.moments[k - 1] for k in scales]))
            out.append(
                self.verdict(
                    uniform <= cfg.moment_band,
                    uniform,
                    cfg.moment_band,
                    f"E O_k^{t} max/min over k={scales}",
                    claim_id=f"count-moment-t{t}",
                )
            )
            out.append(
                self.verdict(
                    table.normalized_band <= cfg.moment_band,
                    table.normalized_band,
                    cfg.moment_band,
                    f"E|partial sum|^{t} / m^{t / 2:g} over m={list(table.windows)}: "
                    + ", ".join(f"{v:.3f}" for v in table.normalized),
                    claim_id=f"partial-sum-moment-t{t}",
                )
            )
        return out


class MaximalInequalityClaim(BaseClaim):
    claim_id = "maximal-inequality"
    statement = (
        "P(max_{i<=n} |X_1 + ... + X_i| >= lambda) is at most C(n/lambda^2 + sqrt(n)/lambda) for the "
        "centred counts X_k."
    )

    def evaluate(self, ctx: VerifyContext) -> list[ClaimVerdict]:
        cfg = ctx.settings
        table = maximal_inequality_check(ctx.dataset, cfg.lambda_grid, est=ctx.estimators)
        worst = max(table.normalized, default=0.0)
        msg = f"n={table.n}, fitted C={table.fitted_c:.3f}, P_hat=" + ", ".join(f"{p:.3f}" for p in table.probabilities)
        return [self.verdict(worst <= cfg.maximal_band, worst, cfg.maximal_band, msg)]


class LowerDeviationClaim(BaseClaim):
    claim_id = "lower-deviation"
    statement = "Windows of m annuli holding at most alpha*m outlets become rare as m grows."

    def evaluate(self, ctx: VerifyContext) -> list[ClaimVerdict]:
        cfg = ctx.settings
        n, m_top = cfg.deviation_window
        m_values = list(range(0, m_top + 1))
        table = lower_deviation_check(ctx.dataset, n, m_values, cfg.alpha_grid)
        alpha = min((a for a in cfg.alpha_grid if a > 0), default=0.0)
        size = len(ctx.dataset)
        probs = [table.probability(m, alpha) for m in m_values]
        rise = 0.0
        for prev, cur in zip(probs[1:], probs[2:]):
            se = np.sqrt(max(prev * (1 - prev), 1.0 / size) / size)
            rise = max(rise, cur - prev - 2 * se)
        ok = probs[0] == 1.0 and rise <= 0.0
        msg = f"O({n}, {n}+m) <= {alpha:g} m for m={m_values}: " + ", ".join(f"{p:.3f}" for p in probs)
        return [self.verdict(ok, rise, 0.0, msg)]
