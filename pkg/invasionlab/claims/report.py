"""Verdict report: collects claim verdicts, renders the JSON document and its schema."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field

from invasionlab.claims.base_claim import BaseClaim, ClaimVerdict, VerdictStatus, VerifyContext
from invasionlab.core.errors import InvasionLabError
from invasionlab.utils.output import write_json

__all__ = ["VerdictEntry", "VerdictDocument", "VerdictReport", "evaluate_claims", "write_schema"]

logger = logging.getLogger(__name__)


class VerdictEntry(BaseModel):
    claim_id: str
    statement: str
    status: VerdictStatus
    statistic: float | None = Field(description="Measured value the verdict is based on.")
    threshold: float | None = Field(description="Bound the statistic was compared with.")
    passed: bool
    message: str


class VerdictDocument(BaseModel):
    header: dict[str, Any]
    config_hash: str
    passed: bool
    verdicts: list[VerdictEntry]


@dataclass
class VerdictReport:
    header: dict[str, Any]
    verdicts: list[ClaimVerdict] = field(default_factory=list)

    @property
    def config_hash(self) -> str:
        return str(self.header.get("config_hash", ""))

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    @property
    def failures(self) -> list[ClaimVerdict]:
        return [v for v in self.verdicts if not v.passed]

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def add(self, verdicts: list[ClaimVerdict]) -> None:
        self.verdicts.extend(verdicts)

    def to_document(self) -> VerdictDocument:
        return VerdictDocument(
            header=self.header,
            config_hash=self.config_hash,
            passed=self.passed,
            verdicts=[
                VerdictEntry(
                    claim_id=v.claim_id,
                    statement=v.statement,
                    status=v.status,
                    statistic=v.statistic,
                    threshold=v.threshold,
                    passed=v.passed,
                    message=v.message,
                )
                for v in self.verdicts
            ],
        )

    def write(self, path: Path) -> Path:
        return write_json(path, self.to_document().model_dump(mode="json"))

    @classmethod
    def read(cls, path: Path) -> VerdictDocument:
        return VerdictDocument.model_validate(json.loads(path.read_text(encoding="utf-8")))


def evaluate_claims(claims: list[BaseClaim], ctx: VerifyContext, header: dict[str, Any]) -> VerdictReport:
    """Evaluate every claim; lab errors become ERROR verdicts instead of aborting the run."""
    report = VerdictReport(header=header)
    for claim in claims:
        try:
            report.add(claim.evaluate(ctx))
        except (InvasionLabError, ValueError) as exc:
            logger.warning("Claim %s could not be evaluated: %s", claim.claim_id, exc)
            report.add([claim.error(exc)])
    return report


def write_schema(path: Path) -> Path:
    return write_json(path, VerdictDocument.model_json_schema())
