"""Claims on the decorrelation of outlet counts across scales."""

from __future__ import annotations

from invasionlab.analysis.checks import covariance_decay
from invasionlab.claims.base_claim import BaseClaim, ClaimVerdict, VerifyContext

__all__ = ["CovarianceDecayClaim", "RenewalDecayClaim"]


class CovarianceDecayClaim(BaseClaim):
    claim_id = "covariance-decay"
    statement = "sup_j |Cov(O_j, O_{j+k})| decays exponentially in the scale gap k."

    def evaluate(self, ctx: VerifyContext) -> list[ClaimVerdict]:
        k_max = min(ctx.settings.covariance_lags, ctx.dataset.n_max - 1)
        res = covariance_decay(ctx.dataset, k_max, est=ctx.estimators)
        if res.fit is None:
            return [self.verdict(False, None, 0.0, "fewer than two positive covariances; no fit")]
        fit = res.fit
        msg = (
            f"rate {fit.slope:.3f} (95% CI {fit.ci_lo:.3f}..{fit.ci_hi:.3f}); c_hat="
            + ", ".join(f"{c:.4f}" for c in res.c_hat)
        )
        if not res.precondition_met:
            msg += f"; SE above c_hat(0)/10 at lags {list(res.noisy_lags)}"
        return [self.verdict(fit.ci_hi < 0, fit.slope, 0.0, msg)]


class RenewalDecayClaim(BaseClaim):
    claim_id = "renewal-decay"
    statement = (
        "Inside Ann(2^k, 2^(k+l)) the invasion and the truncated invasion G(k, l, m) disagree "
        "with probability decaying exponentially in m."
    )

    def evaluate(self, ctx: VerifyContext) -> list[ClaimVerdict]:
        if ctx.renewal is None:
            return []
        est = ctx.renewal.estimates
        rise = max((b.edges - a.edges - 2 * max(a.edges_se, b.edges_se) for a, b in zip(est, est[1:])), default=0.0)
        out = [
            self.verdict(
                rise <= 0.0,
                rise,
                0.0,
                "P_hat(edges differ) over m: " + ", ".join(f"{e.m}:{e.edges:.3f}" for e in est),
                claim_id=f"{self.claim_id}-monotone",
            ),
            self.verdict(
                est[-1].edges <= ctx.settings.renewal_ceiling,
                est[-1].edges,
                ctx.settings.renewal_ceiling,
                f"P_hat at m={est[-1].m}; outlet sets differ with P_hat={est[-1].outlets:.3f}",
                claim_id=f"{self.claim_id}-ceiling",
            ),
        ]
        fit = ctx.renewal.fit
        if fit is None:
            out.append(self.verdict(False, None, 0.0, "fewer than two positive estimates; no fit", f"{self.claim_id}-rate"))
        else:
            out.append(
                self.verdict(
                    fit.ci_hi < 0,
                    fit.slope,
                    0.0,
                    f"log-linear rate {fit.slope:.3f} (95% CI {fit.ci_lo:.3f}..{fit.ci_hi:.3f})",
                    claim_id=f"{self.claim_id}-rate",
                )
            )
        return out
