"""Exception hierarchy shared by the simulation and analysis layers."""

from __future__ import annotations

__all__ = [
    "InvasionLabError",
    "ResourceLimitError",
    "UncertifiedRegionError",
    "InsufficientDataError",
    "PairingError",
    "ExhaustionError",
    "BracketingError",
    "DegenerateVarianceError",
    "TooManyExclusionsError",
]


class InvasionLabError(Exception):
    """Base class for all InvasionLab errors."""


class ResourceLimitError(InvasionLabError):
    def __init__(self, cap: int, invaded: int, replica: int | None = None) -> None:
        self.cap = cap
        self.invaded = invaded
        self.replica = replica
        where = f" (replica {replica})" if replica is not None else ""
        super().__init__(f"invaded edge count {invaded} exceeds hard cap {cap}{where}")

    def with_replica(self, replica: int) -> ResourceLimitError:
        return ResourceLimitError(self.cap, self.invaded, replica)

    def __reduce__(self):
        return (ResourceLimitError, (self.cap, self.invaded, self.replica))


class UncertifiedRegionError(InvasionLabError):
    def __init__(self, requested_scale: int, certified_scale: int | None) -> None:
        self.requested_scale = requested_scale
        self.certified_scale = certified_scale
        super().__init__(
            f"scale {requested_scale} requested but outlets are certified only up to scale {certified_scale}"
        )


class InsufficientDataError(InvasionLabError):
    def __init__(self, needed: int, available: int, what: str = "outlets") -> None:
        self.needed = needed
        self.available = available
        super().__init__(f"need {needed} {what}, only {available} available; rerun with a larger stop radius")


class PairingError(InvasionLabError):
    """Outlets handed to a decomposition do not come from the given trace."""


class ExhaustionError(InvasionLabError):
    def __init__(self, n_max: int, target: float) -> None:
        self.n_max = n_max
        self.target = target
        super().__init__(f"no square side n <= {n_max} reached crossing probability {target:.4f}")


class BracketingError(InvasionLabError):
    def __init__(self, p: float, sigma: float, target: float) -> None:
        self.p = p
        self.sigma = sigma
        self.target = target
        super().__init__(f"crossing probability {sigma:.4f} at upper probe p={p:.6f} is below target {target:.4f}")


class DegenerateVarianceError(InvasionLabError):
    def __init__(self, n: int) -> None:
        self.n = n
        super().__init__(f"sample variance of O({n}) is zero; standardisation impossible")


class TooManyExclusionsError(InvasionLabError):
    def __init__(self, excluded: int, total: int, limit: float) -> None:
        self.excluded = excluded
        self.total = total
        self.limit = limit
        super().__init__(f"{excluded} of {total} replicas excluded (limit {limit:.0%})")
