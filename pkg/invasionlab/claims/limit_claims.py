"""Claims on the limit laws of O(n), Q_n, R̂_n and τ̂_n."""

from __future__ import annotations

import logging

import numpy as np

from invasionlab.analysis.checks import (
    clt_verdict,
    fluctuation_ratios,
    inverse_clt_verdict,
    slln_consequences,
    slln_path,
)
from invasionlab.analysis.stats import band_ratio
from invasionlab.claims.base_claim import BaseClaim, ClaimVerdict, VerifyContext
from invasionlab.core.errors import InsufficientDataError

__all__ = [
    "OutletCountCltClaim",
    "SllnTrendClaim",
    "InverseCltClaim",
    "FluctuationStabilityClaim",
    "SllnConsequencesClaim",
]

logger = logging.getLogger(__name__)


def _convergent_rs(values: list[float]) -> list[float]:
    return [r for r in values if r > 0.5]


class OutletCountCltClaim(BaseClaim):
    claim_id = "outlet-count-clt"
    statement = "(O(n) - a(n)) / b(n) converges in distribution to a standard normal."

    def evaluate(self, ctx: VerifyContext) -> list[ClaimVerdict]:
        cfg = ctx.settings
        res = clt_verdict(ctx.dataset, cfg.clt_scale, seed=ctx.seed, est=ctx.estimators)
        msg = (
            f"n={res.n}, KS D={res.statistic:.4f} on {res.replicas} replicas "
            f"(unjittered p={res.plain.p_value:.4f})"
        )
        return [self.verdict(res.p_value > cfg.clt_alpha, res.p_value, cfg.clt_alpha, msg)]


class SllnTrendClaim(BaseClaim):
    claim_id = "outlet-count-slln"
    statement = "(O(n) - a(n)) / n^r tends to 0 almost surely for every r > 1/2."

    def evaluate(self, ctx: VerifyContext) -> list[ClaimVerdict]:
        ds, est = ctx.dataset, ctx.estimators
        mid = max(1, (ds.n_max + 1) // 2)
        out = []
        for r in _convergent_rs(ctx.settings.r_values):
            paths = np.array([slln_path(ds, r, i, est=est).deviations for i in range(len(ds))])
            mean_path = paths.mean(axis=0)
            first, last = float(mean_path[mid - 1]), float(mean_path[-1])
            out.append(
                self.verdict(
                    last < first,
                    last,
                    first,
                    f"mean |O(n) - A(n)| / n^{r:g}: {first:.4f} at n={mid}, {last:.4f} at n={ds.n_max}",
                    claim_id=f"{self.claim_id}-r{r:g}",
                )
            )
        return out


class InverseCltClaim(BaseClaim):
    claim_id = "inverse-clt"
    statement = "(a(Q_n) - n) / sigma_n converges to a standard normal and its second moment tends to 1."

    def evaluate(self, ctx: VerifyContext) -> list[ClaimVerdict]:
        cfg = ctx.settings
        n = max(1, int(round(ctx.estimators.A(cfg.inverse_clt_scale))))
        res = inverse_clt_verdict(
            ctx.dataset, n, resamples=ctx.resamples, seed=ctx.seed, est=ctx.estimators
        )
        lo, hi = cfg.inverse_clt_band
        exclusions = f"{res.excluded}/{res.total} replicas excluded"
        return [
            self.verdict(
                lo <= res.second_moment <= hi,
                res.second_moment,
                hi,
                f"n={n}, second moment {res.second_moment:.3f} "
                f"(bootstrap CI {res.ci_lo:.3f}..{res.ci_hi:.3f}) against band [{lo:g}, {hi:g}]; {exclusions}",
                claim_id=f"{self.claim_id}-second-moment",
            ),
            self.verdict(
                res.p_value > cfg.clt_alpha,
                res.p_value,
                cfg.clt_alpha,
                f"n={n}, KS D={res.ks.statistic:.4f}; {exclusions}",
                claim_id=f"{self.claim_id}-normality",
            ),
        ]


class FluctuationStabilityClaim(BaseClaim):
    claim_id = "fluctuations-sqrt-n"
    statement = (
        "E(Q_n - T_n)^2, E(log2 R_n - T_n)^2 and E(log((tau_n - p_c)/(p_{2^T_n} - p_c)))^2 "
        "are all comparable to n, centred at T_n or at their means."
    )

    def evaluate(self, ctx: VerifyContext) -> list[ClaimVerdict]:
        cfg = ctx.settings
        rows = [
            fluctuation_ratios(
                ctx.dataset, n, ctx.pn_table, resamples=ctx.resamples, seed=ctx.seed, est=ctx.estimators
            )
            for n in cfg.fluctuation_scales
        ]
        out = []
        for name in ("q", "radius", "weight"):
            values = [getattr(row, name) for row in rows]
            centered = [getattr(row, f"{name}_centered") for row in rows]
            if any(v is None for v in values):
                logger.info("Fluctuation ratio %r unavailable; skipped", name)
                continue
            band = band_ratio(np.array([v.value for v in values]))
            out.append(
                self.verdict(
                    band <= cfg.fluctuation_band,
                    band,
                    cfg.fluctuation_band,
                    f"{name} ratio over n={cfg.fluctuation_scales}: " + ", ".join(f"{v.value:.3f}" for v in values),
                    claim_id=f"{self.claim_id}-{name}",
                )
            )
            gap = max(
                (v.value / c.value if c.value > 0 else float("inf") for v, c in zip(values, centered)),
                default=float("nan"),
            )
            out.append(
                self.verdict(
                    gap <= cfg.fluctuation_band,
                    gap,
                    cfg.fluctuation_band,
                    f"{name}: T_n-centred over mean-centred ratio, worst case",
                    claim_id=f"{self.claim_id}-{name}-centred",
                )
            )
        return out


class SllnConsequencesClaim(BaseClaim):
    claim_id = "outlet-slln-consequences"
    statement = "(Q_n - T_n)/n^r, (log2 R_n - T_n)/n^r and the outlet-weight log ratio over n^r tend to 0 for r > 1/2."

    def evaluate(self, ctx: VerifyContext) -> list[ClaimVerdict]:
        cfg = ctx.settings
        rs = _convergent_rs(cfg.r_values)
        r = 0.75 if 0.75 in rs else (rs[0] if rs else 0.75)
        replica = min(cfg.reference_replica, len(ctx.dataset) - 1)
        traj = slln_consequences(ctx.dataset, r, replica, ctx.pn_table, est=ctx.estimators)
        out = []
        for name in ("q", "radius", "weight"):
            values = getattr(traj, name)
            if not values:
                continue
            if len(values) < 2:
                raise InsufficientDataError(2, len(values), what=f"points on the {name} trajectory")
            head = max(abs(v) for v in values[: max(1, len(values) // 2)])
            last = abs(values[-1])
            out.append(
                self.verdict(
                    last <= head,
                    last,
                    head,
                    f"replica {traj.replica}, r={r:g}: |last|={last:.4f} against the first-half maximum {head:.4f}",
                    claim_id=f"{self.claim_id}-{name}",
                )
            )
        return out
