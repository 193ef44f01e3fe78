"""Pydantic-based configuration model and YAML loader for InvasionLab."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, Field, field_validator


__all__ = [
    "InvasionSettings",
    "EnsembleSettings",
    "CorrelationSettings",
    "RenewalSettings",
    "VerifySettings",
    "LabSettings",
    "load_settings",
    "dump_settings",
    "config_hash",
]

_CONFIG_FILE_NAMES: list[str] = [
    "invasionlab.yaml",
    "invasionlab.yml",
    ".invasionlab.yaml",
    ".invasionlab.yml",
]


class InvasionSettings(BaseModel):
    """Invasion engine limits and the percolation threshold."""

    hard_cap: int = Field(
        default=100_000_000,
        gt=0,
        description="Maximum number of invaded edges before a run is aborted.",
    )
    p_c: float = Field(
        default=0.5,
        gt=0.0,
        lt=1.0,
        description="Critical probability used as the outlet threshold (exactly 1/2 for bonds on Z^2).",
    )


class EnsembleSettings(BaseModel):
    """Replica ensemble parameters."""

    master_seed: int = Field(default=20100901, ge=0, lt=2**64, description="Master seed of the seed ledger.")
    replicas: int = Field(default=500, gt=0, description="Number of independent replicas.")
    n_max: int = Field(default=6, gt=0, description="Largest dyadic scale whose outlet count is recorded.")
    buffer: int = Field(
        default=4,
        ge=4,
        description="Certification buffer m: runs stop at radius 2^(n_max + m).",
    )
    threads: int = Field(default=1, gt=0, description="Worker pool width.")
    bootstrap_resamples: int = Field(default=1000, gt=0, description="Resamples for bootstrap intervals.")


class CorrelationSettings(BaseModel):
    """Bernoulli percolation probes: correlation length and p_n."""

    master_seed: int = Field(default=7, ge=0, lt=2**64)
    epsilon: float = Field(default=0.25, gt=0.0, lt=1.0, description="Crossing defect epsilon_0.")
    replicas_per_probe: int = Field(default=400, gt=0)
    tolerance: float = Field(default=1e-3, gt=0.0, description="Bisection tolerance in p.")
    n_values: list[int] = Field(default_factory=lambda: [8, 16, 32, 64, 128])
    p_grid: list[float] = Field(default_factory=lambda: [0.55, 0.6, 0.65, 0.7, 0.8])
    n_max: int = Field(default=4096, gt=0, description="Largest square side probed for L(p, eps).")

    @field_validator("p_grid")
    @classmethod
    def _probabilities(cls, value: list[float]) -> list[float]:
        for p in value:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"p={p} outside [0, 1]")
        return value


class RenewalSettings(BaseModel):
    """Coupled full/truncated invasion runs."""

    k: int = Field(default=3, ge=0)
    l: int = Field(default=1, ge=1)
    m_values: list[int] = Field(default_factory=lambda: [1, 2, 3, 4])
    replicas: int = Field(default=200, gt=0)
    reference_margin: int = Field(default=2, ge=0, description="Full runs stop at 2^(k+l+m+margin).")


class VerifySettings(BaseModel):
    """Parameters and pinned bands for the claim checks."""

    clt_scale: int = Field(default=6, gt=0, description="Scale n at which O(n) is tested for normality.")
    variance_scales: list[int] = Field(default_factory=lambda: [2, 4, 6])
    mean_scales: list[int] = Field(default_factory=lambda: [3, 4, 5, 6])
    mean_ratio_band: float = Field(default=3.0, gt=1.0)
    variance_ratio_band: float = Field(default=2.5, gt=1.0)
    clt_alpha: float = Field(default=0.01, gt=0.0, lt=1.0)
    covariance_lags: int = Field(default=3, gt=0)
    moment_orders: list[int] = Field(default_factory=lambda: [1, 2, 3, 4])
    moment_band: float = Field(default=4.0, gt=1.0)
    partial_sum_windows: list[int] = Field(default_factory=lambda: [1, 2, 3])
    lambda_grid: list[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0, 16.0])
    maximal_band: float = Field(default=4.0, gt=0.0)
    alpha_grid: list[float] = Field(default_factory=lambda: [0.0, 0.1, 0.25, 0.5])
    deviation_window: tuple[int, int] = Field(default=(2, 3), description="(n, m) for O(n, n+m).")
    r_values: list[float] = Field(default_factory=lambda: [0.6, 0.75, 1.0])
    inverse_clt_scale: int = Field(default=4, gt=0, description="The inverse CLT is checked at n = round(A(scale)).")
    inverse_clt_band: tuple[float, float] = Field(default=(0.5, 2.0))
    fluctuation_scales: list[int] = Field(default_factory=lambda: [2, 3, 4])
    fluctuation_band: float = Field(default=3.0, gt=1.0)
    renewal: RenewalSettings = Field(default_factory=RenewalSettings)
    run_renewal: bool = Field(default=True, description="Run the coupled full/truncated renewal experiment during verify.")
    weight_ratios: bool = Field(default=True, description="Estimate p_n at sides 2^k for the outlet-weight fluctuation ratio.")
    pn_replicas: int = Field(default=200, gt=0, description="Replicas per p_n estimate used by the weight ratio.")
    reference_replica: int = Field(default=0, ge=0, description="Replica whose path feeds the trajectory checks.")
    renewal_ceiling: float = Field(default=0.1, gt=0.0, le=1.0, description="Upper bound for P(disagreement) at the largest m.")


class LabSettings(BaseModel):
    """Top-level InvasionLab configuration."""

    output_dir: str = Field(default="invasionlab-out", description="Directory for all output files.")
    invasion: InvasionSettings = Field(default_factory=InvasionSettings)
    ensemble: EnsembleSettings = Field(default_factory=EnsembleSettings)
    correlation: CorrelationSettings = Field(default_factory=CorrelationSettings)
    verify: VerifySettings = Field(default_factory=VerifySettings)


def _find_config_file(search_dir: Path) -> Path | None:
    """Walk up from *search_dir* looking for a config file."""
    current = search_dir.resolve()
    while True:
        for name in _CONFIG_FILE_NAMES:
            candidate = current / name
            if candidate.is_file():
                return candidate
        parent = current.parent
        if parent == current:
            break
        current = parent
    return None


def load_settings(
    config_path: Path | None = None,
    search_dir: Path | None = None,
) -> LabSettings:
    """Load settings from a YAML file, falling back to defaults."""
    raw: dict[str, Any] = {}

    if config_path is not None:
        resolved = Path(config_path).resolve()
        if resolved.is_file():
            raw = yaml.safe_load(resolved.read_text(encoding="utf-8")) or {}
    else:
        found = _find_config_file(search_dir or Path.cwd())
        if found is not None:
            raw = yaml.safe_load(found.read_text(encoding="utf-8")) or {}

    return LabSettings(**raw)


def dump_settings(settings: LabSettings, path: Path) -> Path:
    """Write *settings* as YAML; :func:`load_settings` reads it back unchanged."""
    data = settings.model_dump(mode="json")
    path.write_text(yaml.safe_dump(data, sort_keys=True), encoding="utf-8")
    return path


def config_hash(settings: BaseModel) -> str:
    """Short SHA-256 of the canonical JSON form of *settings*.

    The worker count is left out: results do not depend on it.
    """
    data = settings.model_dump(mode="json")
    if isinstance(data.get("ensemble"), dict):
        data["ensemble"].pop("threads", None)
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
