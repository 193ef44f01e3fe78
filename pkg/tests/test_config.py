"""Tests for configuration loading."""
from __future__ import annotations

from pathlib import Path

import pytest
from pydantic import ValidationError

from invasionlab.config.settings import (
    CorrelationSettings,
    EnsembleSettings,
    LabSettings,
    VerifySettings,
    config_hash,
    dump_settings,
    load_settings,
)


class TestEnsembleSettings:
    def test_defaults(self) -> None:
        s = EnsembleSettings()
        assert s.n_max == 6 and s.buffer == 4 and s.threads == 1

    def test_buffer_below_four_rejected(self) -> None:
        with pytest.raises(ValidationError):
            EnsembleSettings(buffer=3)

    def test_seed_must_fit_64_bits(self) -> None:
        with pytest.raises(ValidationError):
            EnsembleSettings(master_seed=2**64)


class TestOtherSections:
    def test_p_grid_range(self) -> None:
        with pytest.raises(ValidationError):
            CorrelationSettings(p_grid=[0.6, 1.2])

    def test_verify_defaults(self) -> None:
        s = VerifySettings()
        assert s.renewal.k == 3 and s.renewal.m_values == [1, 2, 3, 4]
        assert s.inverse_clt_band == (0.5, 2.0)

    def test_p_c_is_one_half(self) -> None:
        assert LabSettings().invasion.p_c == 0.5


class TestLoadSettings:
    def test_load_defaults_no_file(self, tmp_path: Path) -> None:
        assert load_settings(search_dir=tmp_path).ensemble.replicas == 500

    def test_load_from_yaml(self, tmp_path: Path) -> None:
        (tmp_path / "invasionlab.yaml").write_text("ensemble:\n  replicas: 12\n  n_max: 3\noutput_dir: runs\n")
        s = load_settings(search_dir=tmp_path)
        assert s.ensemble.replicas == 12 and s.ensemble.n_max == 3 and s.output_dir == "runs"

    def test_explicit_path_takes_precedence(self, tmp_path: Path) -> None:
        (tmp_path / "invasionlab.yaml").write_text("ensemble:\n  replicas: 12\n")
        explicit = tmp_path / "custom.yaml"
        explicit.write_text("ensemble:\n  replicas: 7\n")
        assert load_settings(config_path=explicit, search_dir=tmp_path).ensemble.replicas == 7

    def test_empty_yaml_returns_defaults(self, tmp_path: Path) -> None:
        (tmp_path / "invasionlab.yaml").write_text("")
        assert load_settings(search_dir=tmp_path).ensemble.replicas == 500

    def test_parent_dir_search(self, tmp_path: Path) -> None:
        (tmp_path / ".invasionlab.yml").write_text("correlation:\n  epsilon: 0.1\n")
        child = tmp_path / "child" / "subdir"
        child.mkdir(parents=True)
        assert load_settings(search_dir=child).correlation.epsilon == 0.1

    def test_invalid_yaml_values(self, tmp_path: Path) -> None:
        (tmp_path / "invasionlab.yaml").write_text("ensemble:\n  replicas: 0\n")
        with pytest.raises(ValidationError):
            load_settings(search_dir=tmp_path)

    def test_dump_round_trip(self, tmp_path: Path, small_settings: LabSettings) -> None:
        path = dump_settings(small_settings, tmp_path / "lab.yaml")
        assert load_settings(config_path=path) == small_settings


class TestConfigHash:
    def test_stable(self) -> None:
        assert config_hash(LabSettings()) == config_hash(LabSettings())
        assert len(config_hash(LabSettings())) == 16

    def test_threads_do_not_count(self) -> None:
        a = LabSettings()
        b = LabSettings(ensemble=EnsembleSettings(threads=8))
        assert config_hash(a) == config_hash(b)

    def test_parameters_count(self) -> None:
        assert config_hash(LabSettings()) != config_hash(LabSettings(ensemble=EnsembleSettings(replicas=3)))
