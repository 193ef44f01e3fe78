"""Base claim interface and verdict model for the InvasionLab verify engine."""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from invasionlab.analysis.ensemble import EnsembleDataset, Estimators, RenewalProfile
    from invasionlab.config.settings import VerifySettings

__all__ = ["VerdictStatus", "ClaimVerdict", "VerifyContext", "BaseClaim"]


class VerdictStatus(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    ERROR = "ERROR"


@dataclass(frozen=True)
class ClaimVerdict:
    claim_id: str
    statement: str
    status: VerdictStatus
    statistic: float | None
    threshold: float | None
    message: str

    @property
    def passed(self) -> bool:
        return self.status is VerdictStatus.PASS


@dataclass
class VerifyContext:
    """Everything a claim may read. Expensive inputs are computed once by the engine."""

    dataset: EnsembleDataset
    estimators: Estimators
    settings: VerifySettings
    resamples: int = 1000
    seed: int = 0
    pn_table: dict[int, float] | None = None
    renewal: RenewalProfile | None = None
    notes: dict[str, object] = field(default_factory=dict)


def _finite(value: float | None) -> float | None:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


class BaseClaim(ABC):
    claim_id: str = "base"
    statement: str = ""

    @abstractmethod
    def evaluate(self, ctx: VerifyContext) -> list[ClaimVerdict]:
        """Check the claim on *ctx* and return one verdict per tested quantity."""

    def verdict(
        self,
        passed: bool,
        statistic: float | None,
        threshold: float | None,
        message: str,
        claim_id: str | None = None,
    ) -> ClaimVerdict:
        return ClaimVerdict(
            claim_id=claim_id or self.claim_id,
            statement=self.statement,
            status=VerdictStatus.PASS if passed else VerdictStatus.FAIL,
            statistic=_finite(statistic),
            threshold=_finite(threshold),
            message=message,
        )

    def error(self, exc: Exception) -> ClaimVerdict:
        return ClaimVerdict(
            claim_id=self.claim_id,
            statement=self.statement,
            status=VerdictStatus.ERROR,
            statistic=None,
            threshold=None,
            message=str(exc),
        )
