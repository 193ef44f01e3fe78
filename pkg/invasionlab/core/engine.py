"""Orchestration engine – ties invasion runs, ensembles, claims and Bernoulli probes together."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable

from invasionlab.analysis.checks import covariance_decay, fluctuation_ratios, q_minus_t_distribution, slln_consequences
from invasionlab.analysis.ensemble import (
    EnsembleDataset,
    Estimators,
    RenewalProfile,
    ReplicaRecord,
    estimate_moments,
    header_for,
    renewal_profile,
    run_ensemble,
    write_estimator_table,
)
from invasionlab.claims import default_claims
from invasionlab.claims.base_claim import BaseClaim, VerifyContext
from invasionlab.claims.report import VerdictReport, evaluate_claims, write_schema
from invasionlab.config.settings import LabSettings, config_hash
from invasionlab.core.errors import InvasionLabError
from invasionlab.core.invasion import InvasionConfig, InvasionTrace, dump_trace, invade, truncated_invasion, verify_greedy
from invasionlab.core.outlets import (
    PondDecomposition,
    decompose,
    decomposition_violations,
    extract_outlets,
    write_counts_csv,
    write_decomposition_csv,
)
from invasionlab.core.weightfield import Seed, WeightField, stream_seed, write_seed_ledger
from invasionlab.percolation.bernoulli import (
    CorrelationLength,
    CrossingEstimate,
    CrossingSampler,
    PnEstimate,
    PnScaling,
    correlation_length,
    p_n_estimate,
    pn_log_ratio_fit,
    write_pn_table,
    write_sigma_table,
)
from invasionlab.utils.output import provenance, write_csv

__all__ = ["LabEngine", "SimulateResult", "EnsembleResult", "VerifyResult", "CorrelationResult"]

logger = logging.getLogger(__name__)


class SimulateResult:
    def __init__(
        self,
        trace: InvasionTrace,
        decomposition: PondDecomposition,
        problems: list[str],
        paths: list[Path],
    ) -> None:
        self.trace = trace
        self.decomposition = decomposition
        self.problems = problems
        self.paths = paths

    @property
    def exit_code(self) -> int:
        return 1 if self.problems else 0


class EnsembleResult:
    def __init__(self, dataset: EnsembleDataset, estimators: Estimators, problems: list[str], paths: list[Path]) -> None:
        self.dataset = dataset
        self.estimators = estimators
        self.problems = problems
        self.paths = paths

    @property
    def exit_code(self) -> int:
        return 1 if self.problems else 0


class VerifyResult:
    def __init__(self, report: VerdictReport, paths: list[Path]) -> None:
        self.report = report
        self.paths = paths

    @property
    def exit_code(self) -> int:
        return self.report.exit_code


class CorrelationResult:
    def __init__(
        self,
        lengths: list[CorrelationLength],
        sigmas: list[CrossingEstimate],
        pn: list[PnEstimate],
        scaling: PnScaling | None,
        paths: list[Path],
    ) -> None:
        self.lengths = lengths
        self.sigmas = sigmas
        self.pn = pn
        self.scaling = scaling
        self.paths = paths

    @property
    def pn_monotone(self) -> bool:
        """p̂_n nonincreasing in n up to interval overlap."""
        ordered = sorted(self.pn, key=lambda e: e.n)
        return all(b.ci_lo <= a.ci_hi for a, b in zip(ordered, ordered[1:]))

    @property
    def exit_code(self) -> int:
        in_range = all(0.5 < e.p_hat < 1.0 for e in self.pn)
        return 0 if in_range and self.pn_monotone else 1


class LabEngine:
    """Central orchestrator for all InvasionLab commands."""

    def __init__(self, settings: LabSettings, output_dir: Path | None = None, threads: int | None = None) -> None:
        self.settings = settings
        self.output_dir = Path(output_dir or settings.output_dir)
        if threads is not None:
            self.settings.ensemble.threads = threads
        self.config_hash = config_hash(settings)
        self._claims: list[BaseClaim] = default_claims()

    @property
    def threads(self) -> int:
        return self.settings.ensemble.threads

    def _header(self, master_seed: int | None, **extra) -> dict:
        return provenance(self.config_hash, master_seed, **extra)

    # ------------------------------------------------------------ simulate

    def run_simulate(
        self,
        seed: int,
        replica: int = 0,
        stop_radius: int | None = None,
        stop_steps: int | None = None,
        truncated: tuple[int, int, int] | None = None,
    ) -> SimulateResult:
        field = WeightField(Seed(seed, replica))
        cap = self.settings.invasion.hard_cap
        if truncated is not None:
            k, l, m = truncated
            trace = truncated_invasion(field, k, l, m, hard_cap=cap)
            stem = f"trace-s{seed}-r{replica}-k{k}-l{l}-m{m}"
        else:
            trace = invade(InvasionConfig(field=field, stop_radius=stop_radius, stop_steps=stop_steps, hard_cap=cap))
            stem = f"trace-s{seed}-r{replica}"
        p_c = self.settings.invasion.p_c
        dec = decompose(trace, extract_outlets(trace, p_c), buffer=self.settings.ensemble.buffer, p_threshold=p_c)
        problems = decomposition_violations(dec)
        bad = verify_greedy(trace)
        if bad:
            problems.append(f"greedy replay failed at steps {bad[:5]}")
        ledger = f"{stream_seed(seed, replica):016x}"
        header = self._header(seed, replica=replica, stop_reason=trace.stop_reason.value)
        paths = [
            dump_trace(trace, self.output_dir / f"{stem}.jsonl", ledger=ledger, config_hash=self.config_hash),
            write_decomposition_csv(self.output_dir / f"{stem}-outlets.csv", header, [(replica, dec)]),
            write_counts_csv(self.output_dir / f"{stem}-counts.csv", header, [(replica, dec)]),
        ]
        return SimulateResult(trace, dec, problems, paths)

    # ------------------------------------------------------------ ensemble

    def dataset_path(self) -> Path:
        return self.output_dir / "ensemble.jsonl"

    def run_ensemble(
        self,
        resume: bool = False,
        on_record: Callable[[ReplicaRecord], None] | None = None,
    ) -> EnsembleResult:
        cfg = self.settings.ensemble
        path = self.dataset_path()
        ds = run_ensemble(
            cfg.master_seed,
            cfg.replicas,
            cfg.n_max,
            cfg.buffer,
            path,
            resume=resume,
            threads=cfg.threads,
            hard_cap=self.settings.invasion.hard_cap,
            p_threshold=self.settings.invasion.p_c,
            config_hash=self.config_hash,
            on_record=on_record,
        )
        est = estimate_moments(ds)
        header = header_for(ds)
        rows = [(rec.replica, k, int(c)) for rec in ds.records for k, c in enumerate(rec.counts, start=1)]
        paths = [
            path,
            write_csv(self.output_dir / "counts.csv", header, ("replica", "k", "O_k"), rows),
            write_estimator_table(self.output_dir / "estimators.csv", header, est),
            write_seed_ledger(self.output_dir / "seeds.tsv", cfg.master_seed, cfg.replicas),
        ]
        return EnsembleResult(ds, est, ds.validate(), paths)

    # ------------------------------------------------------------ verify

    def _pn_table(self, est: Estimators) -> dict[int, float]:
        """p̂ at side 2^k for every k that is some T_n in the verify range."""
        cfg, corr = self.settings.verify, self.settings.correlation
        scales = set()
        for n in range(1, int(est.A_hat[-1]) + 1):
            t = est.T(n)
            if t is not None:
                scales.add(t)
        sampler = CrossingSampler(corr.master_seed, cfg.pn_replicas, self.threads)
        table: dict[int, float] = {}
        for k in sorted(scales):
            try:
                table[k] = p_n_estimate(2**k, corr.epsilon, cfg.pn_replicas, corr.tolerance, sampler=sampler).p_hat
            except InvasionLabError as exc:
                logger.warning("No p_n estimate at side 2^%d: %s", k, exc)
        return table

    def _renewal(self) -> RenewalProfile | None:
        ren = self.settings.verify.renewal
        if not self.settings.verify.run_renewal:
            return None
        return renewal_profile(
            self.settings.ensemble.master_seed,
            ren.k,
            ren.l,
            ren.m_values,
            ren.replicas,
            reference_margin=ren.reference_margin,
            threads=self.threads,
            hard_cap=self.settings.invasion.hard_cap,
            p_threshold=self.settings.invasion.p_c,
        )

    def run_verify(self, dataset_path: Path | None = None) -> VerifyResult:
        ds = EnsembleDataset.load(dataset_path or self.dataset_path())
        est = estimate_moments(ds)
        cfg = self.settings.verify
        pn_table = self._pn_table(est) if cfg.weight_ratios else None
        renewal = self._renewal()
        ctx = VerifyContext(
            dataset=ds,
            estimators=est,
            settings=cfg,
            resamples=self.settings.ensemble.bootstrap_resamples,
            seed=0,
            pn_table=pn_table,
            renewal=renewal,
        )
        header = header_for(ds)
        header["config_hash"] = self.config_hash
        report = evaluate_claims(self._claims, ctx, header)
        paths = [
            report.write(self.output_dir / "verdicts.json"),
            write_schema(self.output_dir / "verdicts.schema.json"),
            *self._write_verify_tables(ds, est, header, pn_table, renewal),
        ]
        return VerifyResult(report, paths)

    def _write_verify_tables(
        self,
        ds: EnsembleDataset,
        est: Estimators,
        header: dict,
        pn_table: dict[int, float] | None,
        renewal: RenewalProfile | None,
    ) -> list[Path]:
        cfg = self.settings.verify
        paths: list[Path] = []
        k_max = min(cfg.covariance_lags, ds.n_max - 1)
        if k_max >= 1:
            cov = covariance_decay(ds, k_max, est=est)
            paths.append(
                write_csv(
                    self.output_dir / "covariance.csv",
                    header,
                    ("k", "c_hat", "stderr"),
                    [(k, f"{c:.6g}", f"{s:.6g}") for k, c, s in zip(cov.lags, cov.c_hat, cov.c_se)],
                )
            )
        rows = []
        for n in cfg.fluctuation_scales:
            try:
                row = fluctuation_ratios(ds, n, pn_table, resamples=self.settings.ensemble.bootstrap_resamples, est=est)
            except InvasionLabError as exc:
                logger.warning("Fluctuation ratios at n=%d skipped: %s", n, exc)
                continue
            for name in ("q", "q_centered", "radius", "radius_centered", "weight", "weight_centered"):
                ratio = getattr(row, name)
                if ratio is not None:
                    rows.append((n, row.t_n, name, f"{ratio.value:.6g}", f"{ratio.ci_lo:.6g}", f"{ratio.ci_hi:.6g}", row.excluded))
            dist = q_minus_t_distribution(ds, n, est=est)
            paths.append(
                write_csv(self.output_dir / f"q-minus-t-n{n}.csv", header, ("value",), [(f"{v:.6g}",) for v in dist])
            )
        paths.append(
            write_csv(
                self.output_dir / "fluctuations.csv",
                header,
                ("n", "T_n", "ratio", "value", "ci_lo", "ci_hi", "excluded"),
                rows,
            )
        )
        traj_rows = []
        replica = min(cfg.reference_replica, len(ds) - 1)
        for r in cfg.r_values:
            traj = slln_consequences(ds, r, replica, pn_table, est=est)
            for i, n in enumerate(traj.scales):
                radius = traj.radius[i] if i < len(traj.radius) else ""
                weight = traj.weight[i] if traj.weight is not None and i < len(traj.weight) else ""
                traj_rows.append((r, n, traj.q[i], radius, weight))
        paths.append(
            write_csv(self.output_dir / "slln-trajectories.csv", header, ("r", "n", "q", "radius", "weight"), traj_rows)
        )
        if renewal is not None:
            paths.append(
                write_csv(
                    self.output_dir / "renewal.csv",
                    header,
                    ("k", "l", "m", "replicas", "edges", "edges_se", "outlets", "outlets_se"),
                    [
                        (e.k, e.l, e.m, e.replicas, f"{e.edges:.6f}", f"{e.edges_se:.6f}", f"{e.outlets:.6f}", f"{e.outlets_se:.6f}")
                        for e in renewal.estimates
                    ],
                )
            )
        return paths

    # ------------------------------------------------------------ correlation

    def run_correlation(self) -> CorrelationResult:
        corr = self.settings.correlation
        sampler = CrossingSampler(corr.master_seed, corr.replicas_per_probe, self.threads)
        lengths = []
        for p in corr.p_grid:
            try:
                lengths.append(
                    correlation_length(p, corr.epsilon, corr.replicas_per_probe, n_max=corr.n_max, sampler=sampler)
                )
            except InvasionLabError as exc:
                logger.warning("L(p=%.4f) not resolved: %s", p, exc)
        sigmas = [est for cl in lengths for est in cl.probes.values()]
        pn = [
            p_n_estimate(n, corr.epsilon, corr.replicas_per_probe, corr.tolerance, sampler=sampler)
            for n in corr.n_values
        ]
        scaling = pn_log_ratio_fit(pn) if sum(e.p_hat > 0.5 for e in pn) >= 2 else None
        header = self._header(corr.master_seed, epsilon=corr.epsilon, replicas=corr.replicas_per_probe)
        paths = [
            write_sigma_table(self.output_dir / "sigma.csv", header, sigmas, corr.epsilon),
            write_pn_table(self.output_dir / "pn.csv", header, pn),
            write_csv(
                self.output_dir / "correlation-length.csv",
                header,
                ("p", "epsilon", "L_hat", "confident", "replicas"),
                [(cl.p, cl.epsilon, cl.length, int(cl.confident), cl.replicas) for cl in lengths],
            ),
        ]
        return CorrelationResult(lengths, sigmas, pn, scaling, paths)
