"""Claims module for InvasionLab – statistical verdicts on ensemble data."""

from __future__ import annotations

from invasionlab.claims.base_claim import BaseClaim
from invasionlab.claims.limit_claims import (
    FluctuationStabilityClaim,
    InverseCltClaim,
    OutletCountCltClaim,
    SllnConsequencesClaim,
    SllnTrendClaim,
)
from invasionlab.claims.mixing_claims import CovarianceDecayClaim, RenewalDecayClaim
from invasionlab.claims.moment_claims import (
    LowerDeviationClaim,
    MaximalInequalityClaim,
    MeanBandClaim,
    MomentBoundClaim,
    VarianceGrowthClaim,
)

__all__ = ["default_claims"]


def default_claims() -> list[BaseClaim]:
    return [
        MeanBandClaim(),
        VarianceGrowthClaim(),
        OutletCountCltClaim(),
        SllnTrendClaim(),
        CovarianceDecayClaim(),
        RenewalDecayClaim(),
        MomentBoundClaim(),
        MaximalInequalityClaim(),
        LowerDeviationClaim(),
        InverseCltClaim(),
        FluctuationStabilityClaim(),
        SllnConsequencesClaim(),
    ]
