"""Shared pytest fixtures for the InvasionLab test suite."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from invasionlab.analysis.ensemble import EnsembleDataset
from invasionlab.config.settings import LabSettings
from invasionlab.core.lattice import Edge, edge_key
from invasionlab.core.weightfield import Seed, WeightField


class TableField(WeightField):
    """Weight field with hand-set weights; unset edges fall back to *default*."""

    def __init__(self, weights: dict[Edge, float], default: float = 0.99) -> None:
        super().__init__(Seed(0))
        self._table = {edge_key(e): w for e, w in weights.items()}
        self._default = default

    def weight_key(self, key: int) -> float:
        return self._table.get(key, self._default)

    def weights_of_keys(self, keys: np.ndarray) -> np.ndarray:
        return np.array([self.weight_key(int(k)) for k in np.asarray(keys).ravel()], dtype=np.float64)


SMALL_SETTINGS = {
    "output_dir": "out",
    "ensemble": {"master_seed": 5, "replicas": 6, "n_max": 2, "buffer": 4, "bootstrap_resamples": 50},
    "correlation": {
        "master_seed": 3,
        "replicas_per_probe": 40,
        "n_values": [2, 4],
        "p_grid": [0.8],
        "n_max": 64,
        "tolerance": 0.01,
    },
    "verify": {
        "clt_scale": 2,
        "variance_scales": [1, 2],
        "mean_scales": [1, 2],
        "covariance_lags": 1,
        "partial_sum_windows": [1],
        "deviation_window": [0, 2],
        "inverse_clt_scale": 2,
        "fluctuation_scales": [1],
        "run_renewal": False,
        "weight_ratios": False,
        "lambda_grid": [1.0, 2.0],
    },
}


@pytest.fixture
def small_settings() -> LabSettings:
    return LabSettings(**SMALL_SETTINGS)


@pytest.fixture
def out_dir(tmp_path: Path) -> Path:
    d = tmp_path / "out"
    d.mkdir()
    return d


@pytest.fixture
def field() -> WeightField:
    return WeightField(Seed(12345, 0))


@pytest.fixture
def poisson_dataset() -> EnsembleDataset:
    """Independent Poisson(2) counts on eight scales for 400 replicas."""
    rng = np.random.default_rng(2024)
    counts = rng.poisson(2.0, size=(400, 8))
    return EnsembleDataset.from_counts(counts)


@pytest.fixture
def constant_dataset() -> EnsembleDataset:
    return EnsembleDataset.from_counts(np.full((50, 6), 2))


@pytest.fixture
def normal_dataset() -> EnsembleDataset:
    """Continuous iid N(3, 1) increments; O(n) is exactly Gaussian."""
    rng = np.random.default_rng(7)
    return EnsembleDataset.from_counts(rng.normal(3.0, 1.0, size=(500, 6)))


@pytest.fixture
def ar1_dataset() -> EnsembleDataset:
    """Stationary AR(1) increments with coefficient 1/2: Cov at lag k is 0.5^k / 0.75."""
    rng = np.random.default_rng(99)
    replicas, scales = 20000, 6
    x = np.empty((replicas, scales))
    x[:, 0] = rng.normal(0.0, np.sqrt(1 / 0.75), size=replicas)
    for k in range(1, scales):
        x[:, k] = 0.5 * x[:, k - 1] + rng.normal(size=replicas)
    return EnsembleDataset.from_counts(x + 5.0)
