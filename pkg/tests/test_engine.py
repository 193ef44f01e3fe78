"""Tests for the lab engine."""
from __future__ import annotations

from pathlib import Path

import pytest

from invasionlab.claims.report import VerdictReport
from invasionlab.config.settings import LabSettings, config_hash
from invasionlab.core.engine import LabEngine
from invasionlab.core.errors import ResourceLimitError
from invasionlab.core.invasion import StopReason, load_trace_entries
from invasionlab.utils.output import read_csv


class TestLabEngine:
    def test_output_dir_from_settings(self, small_settings: LabSettings) -> None:
        assert LabEngine(small_settings).output_dir == Path("out")

    def test_threads_override_keeps_hash(self, small_settings: LabSettings, out_dir: Path) -> None:
        before = config_hash(small_settings)
        engine = LabEngine(small_settings, out_dir, threads=3)
        assert engine.threads == 3
        assert engine.config_hash == before


class TestRunSimulate:
    def test_radius_run(self, small_settings: LabSettings, out_dir: Path) -> None:
        result = LabEngine(small_settings, out_dir).run_simulate(11, stop_radius=16)
        assert result.exit_code == 0
        assert result.trace.stop_reason is StopReason.RADIUS_HIT
        assert result.decomposition.certified_scale == 0
        trace_path, outlets_path, counts_path = result.paths
        assert counts_path.name == "trace-s11-r0-counts.csv"
        header, entries = load_trace_entries(trace_path)
        assert header["config_hash"] == config_hash(small_settings)
        assert len(entries) == len(result.trace)
        _, rows = read_csv(outlets_path)
        assert len(rows) == len(result.decomposition.outlets)

    def test_step_run(self, small_settings: LabSettings, out_dir: Path) -> None:
        result = LabEngine(small_settings, out_dir).run_simulate(11, replica=2, stop_steps=25)
        assert result.trace.stop_reason is StopReason.STEPS_EXHAUSTED
        assert len(result.trace) == 25
        assert result.paths[0].name == "trace-s11-r2.jsonl"

    def test_truncated_run(self, small_settings: LabSettings, out_dir: Path) -> None:
        result = LabEngine(small_settings, out_dir).run_simulate(11, truncated=(2, 1, 1))
        assert result.trace.config.seed_radius == 2
        assert result.paths[0].name == "trace-s11-r0-k2-l1-m1.jsonl"

    def test_no_stop_rule(self, small_settings: LabSettings, out_dir: Path) -> None:
        with pytest.raises(ValueError):
            LabEngine(small_settings, out_dir).run_simulate(11)

    def test_hard_cap(self, small_settings: LabSettings, out_dir: Path) -> None:
        small_settings.invasion.hard_cap = 10
        with pytest.raises(ResourceLimitError):
            LabEngine(small_settings, out_dir).run_simulate(11, stop_radius=1000)


class TestRunEnsemble:
    def test_writes_tables(self, small_settings: LabSettings, out_dir: Path) -> None:
        result = LabEngine(small_settings, out_dir).run_ensemble()
        assert result.exit_code == 0
        assert len(result.dataset) == 6
        assert [p.name for p in result.paths] == ["ensemble.jsonl", "counts.csv", "estimators.csv", "seeds.tsv"]
        header, rows = read_csv(out_dir / "counts.csv")
        assert header["config_hash"] == config_hash(small_settings)
        assert len(rows) == 6 * 2

    def test_resume_is_idempotent(self, small_settings: LabSettings, out_dir: Path) -> None:
        engine = LabEngine(small_settings, out_dir)
        engine.run_ensemble()
        first = engine.dataset_path().read_bytes()
        engine.run_ensemble(resume=True)
        assert engine.dataset_path().read_bytes() == first


class TestRunVerify:
    def test_report_written(self, small_settings: LabSettings, out_dir: Path) -> None:
        engine = LabEngine(small_settings, out_dir)
        engine.run_ensemble()
        result = engine.run_verify()
        doc = VerdictReport.read(out_dir / "verdicts.json")
        assert doc.config_hash == engine.config_hash
        assert len(doc.verdicts) == len(result.report.verdicts) > 0
        assert result.exit_code == (0 if doc.passed else 1)
        assert (out_dir / "verdicts.schema.json").is_file()
        assert (out_dir / "slln-trajectories.csv").is_file()
        assert not (out_dir / "renewal.csv").exists()

    def test_missing_dataset(self, small_settings: LabSettings, out_dir: Path) -> None:
        with pytest.raises(FileNotFoundError):
            LabEngine(small_settings, out_dir).run_verify()


class TestRunCorrelation:
    def test_tables(self, small_settings: LabSettings, out_dir: Path) -> None:
        result = LabEngine(small_settings, out_dir).run_correlation()
        assert [e.n for e in result.pn] == [2, 4]
        assert all(0.0 <= e.p_hat <= 1.0 for e in result.pn)
        assert [p.name for p in result.paths] == ["sigma.csv", "pn.csv", "correlation-length.csv"]
        assert result.exit_code in (0, 1)
