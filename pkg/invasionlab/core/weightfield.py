"""Counter-based edge weights.

A :class:`WeightField` is a pure function from (seed, canonical edge) to a weight in
(0, 1). Nothing is stored: two invasions reading the same field see the same
environment, which is what the coupled full/truncated experiments rely on.

The hash is SplitMix64 applied twice: once to the packed edge id, once to that
result xor-ed with the per-replica stream seed. The scalar path (pure Python
integers) and the vectorised path (numpy ``uint64``) produce identical bits.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from invasionlab.core.lattice import COORD_OFFSET, Edge, edge_key

__all__ = [
    "MIXER_VERSION",
    "Seed",
    "WeightField",
    "mix64",
    "stream_seed",
    "write_seed_ledger",
    "read_seed_ledger",
]

logger = logging.getLogger(__name__)

MIXER_VERSION = "splitmix64-v1"

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
# weights use the top 52 bits so that (h + 1/2) * 2^-52 is exact in a double
_SCALE = 2.0 ** -52


def mix64(z: int) -> int:
    z = (z + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = z + np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def stream_seed(master: int, replica_index: int) -> int:
    """Per-replica stream seed, ``mix64(master + golden * (replica_index + 1))``."""
    if not 0 <= master <= _MASK:
        raise ValueError("master seed must be a 64-bit unsigned integer")
    if replica_index < 0:
        raise ValueError("replica index must be non-negative")
    return mix64((master + _GOLDEN * (replica_index + 1)) & _MASK)


@dataclass(frozen=True)
class Seed:
    master: int
    replica_index: int = 0

    @property
    def stream(self) -> int:
        return stream_seed(self.master, self.replica_index)


class WeightField:
    """Uniform(0, 1) weights keyed by a :class:`Seed`; tau(e*) is tau(e).

    A weight is ``((h >> 12) + 0.5) * 2**-52`` for the 64-bit hash ``h``, so it keeps 52
    bits rather than 53. With 53 bits the centred value ``(2**53 - 1 + 0.5) * 2**-53``
    rounds to exactly 1.0 in a double; 52 bits keep every weight strictly inside (0, 1).
    Weights are distinct up to hash collisions, and the invasion heap breaks any tie by
    packed edge id.

    :meth:`weights_of_keys` is the bulk path used by the invasion engine; a subclass that
    overrides :meth:`weight_key` must override it too.
    """

    def __init__(self, seed: Seed | int) -> None:
        self.seed = seed if isinstance(seed, Seed) else Seed(seed)
        self._stream = self.seed.stream

    def __repr__(self) -> str:
        return f"WeightField(master={self.seed.master}, replica={self.seed.replica_index})"

    def weight_key(self, key: int) -> float:
        """Weight of the edge with packed id *key* (see :func:`edge_key`)."""
        h = mix64(mix64(key) ^ self._stream)
        return ((h >> 12) + 0.5) * _SCALE

    def weight(self, e: Edge) -> float:
        return self.weight_key(edge_key(e))

    def is_p_open(self, e: Edge, p: float) -> bool:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p={p} outside [0, 1]")
        return self.weight(e) < p

    def weights_of_keys(self, keys: np.ndarray) -> np.ndarray:
        keys = np.asarray(keys, dtype=np.uint64)
        h = _mix64_array(_mix64_array(keys) ^ np.uint64(self._stream))
        return ((h >> np.uint64(12)).astype(np.float64) + 0.5) * _SCALE

    def edge_weights(self, xs: np.ndarray, ys: np.ndarray, vertical: bool) -> np.ndarray:
        """Weights of the edges whose lower-left endpoints are ``(xs, ys)``."""
        xs = np.asarray(xs, dtype=np.int64) + COORD_OFFSET
        ys = np.asarray(ys, dtype=np.int64) + COORD_OFFSET
        keys = (xs.astype(np.uint64) << np.uint64(33)) | (ys.astype(np.uint64) << np.uint64(1))
        if vertical:
            keys = keys | np.uint64(1)
        return self.weights_of_keys(keys)

    def horizontal_grid(self, x0: int, y0: int, nx: int, ny: int) -> np.ndarray:
        """Weights of horizontal edges ``(x, y)-(x+1, y)``, indexed ``[x - x0, y - y0]``."""
        gx, gy = np.meshgrid(np.arange(x0, x0 + nx), np.arange(y0, y0 + ny), indexing="ij")
        return self.edge_weights(gx, gy, vertical=False)

    def vertical_grid(self, x0: int, y0: int, nx: int, ny: int) -> np.ndarray:
        """Weights of vertical edges ``(x, y)-(x, y+1)``, indexed ``[x - x0, y - y0]``."""
        gx, gy = np.meshgrid(np.arange(x0, x0 + nx), np.arange(y0, y0 + ny), indexing="ij")
        return self.edge_weights(gx, gy, vertical=True)


def write_seed_ledger(path: Path, master: int, replicas: int) -> Path:
    """One ``replica_index<TAB>stream_seed_hex`` line per replica after a header."""
    lines = [f"# mixer={MIXER_VERSION} master={master}"]
    lines.extend(f"{i}\t{stream_seed(master, i):016x}" for i in range(replicas))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug("Seed ledger with %d replicas written to %s", replicas, path)
    return path


def read_seed_ledger(path: Path) -> tuple[str, dict[int, int]]:
    """Return the header line and the replica -> stream seed map."""
    header = ""
    seeds: dict[int, int] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            header = line
            continue
        if not line.strip():
            continue
        idx, hexed = line.split("\t")
        seeds[int(idx)] = int(hexed, 16)
    return header, seeds
