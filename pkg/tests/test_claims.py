"""Tests for the claim checks and the verdict report."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from invasionlab.analysis.ensemble import EnsembleDataset, RenewalEstimate, RenewalProfile, estimate_moments
from invasionlab.analysis.stats import binomial_stderr, loglinear_fit
from invasionlab.claims import default_claims
from invasionlab.claims.base_claim import BaseClaim, ClaimVerdict, VerdictStatus, VerifyContext
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
from invasionlab.claims.report import VerdictReport, evaluate_claims, write_schema
from invasionlab.config.settings import VerifySettings


def _ctx(ds: EnsembleDataset, renewal: RenewalProfile | None = None, **overrides) -> VerifyContext:
    settings = VerifySettings(**overrides)
    return VerifyContext(
        dataset=ds,
        estimators=estimate_moments(ds),
        settings=settings,
        resamples=100,
        renewal=renewal,
    )


def _statuses(verdicts: list[ClaimVerdict]) -> dict[str, VerdictStatus]:
    return {v.claim_id: v.status for v in verdicts}


def _renewal(probabilities: list[float], replicas: int = 400) -> RenewalProfile:
    estimates = tuple(
        RenewalEstimate(3, 1, m, replicas, p, binomial_stderr(p, replicas), p / 2, binomial_stderr(p / 2, replicas))
        for m, p in enumerate(probabilities, start=1)
    )
    ms = np.array([e.m for e in estimates], dtype=float)
    ps = np.array(probabilities)
    return RenewalProfile(estimates, loglinear_fit(ms, ps, np.array([e.edges_se for e in estimates])))


class TestMomentClaims:
    def test_mean_band_passes_on_stationary_counts(self, poisson_dataset: EnsembleDataset) -> None:
        (v,) = MeanBandClaim().evaluate(_ctx(poisson_dataset))
        assert v.passed
        assert v.claim_id == "mean-count-bounded"
        assert v.threshold == 3.0

    def test_mean_band_fails_on_growing_counts(self) -> None:
        ds = EnsembleDataset.from_counts(np.tile([1, 2, 4, 8, 16, 32], (10, 1)))
        (v,) = MeanBandClaim().evaluate(_ctx(ds))
        assert v.status is VerdictStatus.FAIL
        assert v.statistic == pytest.approx(8.0)

    def test_variance_growth(self, poisson_dataset: EnsembleDataset) -> None:
        (v,) = VarianceGrowthClaim().evaluate(_ctx(poisson_dataset))
        assert v.passed

    def test_moment_bound_ids(self, poisson_dataset: EnsembleDataset) -> None:
        verdicts = MomentBoundClaim().evaluate(_ctx(poisson_dataset))
        ids = [v.claim_id for v in verdicts]
        assert ids == [f"{kind}-moment-t{t}" for t in (1, 2, 3, 4) for kind in ("count", "partial-sum")]
        assert all(v.passed for v in verdicts if v.claim_id.startswith("count-"))

    def test_maximal_inequality(self, poisson_dataset: EnsembleDataset) -> None:
        (v,) = MaximalInequalityClaim().evaluate(_ctx(poisson_dataset))
        assert v.passed
        assert "fitted C" in v.message

    def test_lower_deviation(self, poisson_dataset: EnsembleDataset) -> None:
        (v,) = LowerDeviationClaim().evaluate(_ctx(poisson_dataset))
        assert v.passed


class TestLimitClaims:
    def test_clt_on_gaussian_sums(self, normal_dataset: EnsembleDataset) -> None:
        (v,) = OutletCountCltClaim().evaluate(_ctx(normal_dataset))
        assert v.passed

    def test_slln_trend(self, normal_dataset: EnsembleDataset) -> None:
        verdicts = SllnTrendClaim().evaluate(_ctx(normal_dataset, r_values=[0.4, 0.75, 1.0]))
        # r <= 1/2 is outside the convergence range and gets no verdict
        assert _statuses(verdicts) == {
            "outlet-count-slln-r0.75": VerdictStatus.PASS,
            "outlet-count-slln-r1": VerdictStatus.PASS,
        }

    def test_inverse_clt(self, poisson_dataset: EnsembleDataset) -> None:
        verdicts = InverseCltClaim().evaluate(_ctx(poisson_dataset))
        statuses = _statuses(verdicts)
        assert set(statuses) == {"inverse-clt-second-moment", "inverse-clt-normality"}
        assert statuses["inverse-clt-second-moment"] is VerdictStatus.PASS

    def test_fluctuations_skip_missing_ratios(self, poisson_dataset: EnsembleDataset) -> None:
        verdicts = FluctuationStabilityClaim().evaluate(_ctx(poisson_dataset))
        assert [v.claim_id for v in verdicts] == ["fluctuations-sqrt-n-q", "fluctuations-sqrt-n-q-centred"]

    def test_slln_consequences(self, poisson_dataset: EnsembleDataset) -> None:
        verdicts = SllnConsequencesClaim().evaluate(_ctx(poisson_dataset))
        assert [v.claim_id for v in verdicts] == ["outlet-slln-consequences-q"]


class TestMixingClaims:
    def test_covariance_decay_on_ar1(self, ar1_dataset: EnsembleDataset) -> None:
        (v,) = CovarianceDecayClaim().evaluate(_ctx(ar1_dataset))
        assert v.passed
        assert v.statistic < 0

    def test_renewal_skipped_without_profile(self, poisson_dataset: EnsembleDataset) -> None:
        assert RenewalDecayClaim().evaluate(_ctx(poisson_dataset)) == []

    def test_renewal_decay(self, poisson_dataset: EnsembleDataset) -> None:
        verdicts = RenewalDecayClaim().evaluate(_ctx(poisson_dataset, renewal=_renewal([0.4, 0.2, 0.1, 0.05])))
        assert _statuses(verdicts) == {
            "renewal-decay-monotone": VerdictStatus.PASS,
            "renewal-decay-ceiling": VerdictStatus.PASS,
            "renewal-decay-rate": VerdictStatus.PASS,
        }

    def test_renewal_rising(self, poisson_dataset: EnsembleDataset) -> None:
        verdicts = RenewalDecayClaim().evaluate(_ctx(poisson_dataset, renewal=_renewal([0.1, 0.2, 0.4, 0.8])))
        statuses = _statuses(verdicts)
        assert statuses["renewal-decay-monotone"] is VerdictStatus.FAIL
        assert statuses["renewal-decay-ceiling"] is VerdictStatus.FAIL
        assert statuses["renewal-decay-rate"] is VerdictStatus.FAIL


class _Broken(BaseClaim):
    claim_id = "broken"
    statement = "Always raises."

    def evaluate(self, ctx: VerifyContext) -> list[ClaimVerdict]:
        raise ValueError("no data")


class TestReport:
    def test_errors_become_verdicts(self, poisson_dataset: EnsembleDataset) -> None:
        report = evaluate_claims([_Broken(), MeanBandClaim()], _ctx(poisson_dataset), {"config_hash": "abc"})
        assert [v.status for v in report.verdicts] == [VerdictStatus.ERROR, VerdictStatus.PASS]
        assert report.verdicts[0].message == "no data"
        assert not report.passed
        assert report.exit_code == 1
        assert report.config_hash == "abc"

    def test_uncertified_scale_is_an_error(self, poisson_dataset: EnsembleDataset) -> None:
        report = evaluate_claims([MeanBandClaim()], _ctx(poisson_dataset, mean_scales=[20]), {})
        assert report.verdicts[0].status is VerdictStatus.ERROR

    def test_write_and_read(self, poisson_dataset: EnsembleDataset, tmp_path: Path) -> None:
        report = evaluate_claims([MeanBandClaim(), VarianceGrowthClaim()], _ctx(poisson_dataset), {"config_hash": "h"})
        path = report.write(tmp_path / "verdicts.json")
        doc = VerdictReport.read(path)
        assert doc.passed == report.passed
        assert doc.config_hash == "h"
        assert [v.claim_id for v in doc.verdicts] == ["mean-count-bounded", "variance-linear"]
        assert report.exit_code == (0 if report.passed else 1)

    def test_non_finite_statistics_serialise_as_null(self, tmp_path: Path) -> None:
        ds = EnsembleDataset.from_counts(np.tile([0, 0, 1, 1, 1, 1], (10, 1)))
        report = evaluate_claims([MeanBandClaim()], _ctx(ds, mean_scales=[1, 3]), {})
        payload = json.loads(report.write(tmp_path / "v.json").read_text(encoding="utf-8"))
        assert payload["verdicts"][0]["statistic"] is None
        assert payload["verdicts"][0]["status"] == "FAIL"

    def test_schema(self, tmp_path: Path) -> None:
        schema = json.loads(write_schema(tmp_path / "schema.json").read_text(encoding="utf-8"))
        assert "verdicts" in schema["properties"]

    def test_default_claims_have_unique_ids(self) -> None:
        ids = [c.claim_id for c in default_claims()]
        assert len(ids) == len(set(ids)) == 12
