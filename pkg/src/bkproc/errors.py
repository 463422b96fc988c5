"""Exception hierarchy shared across the toolkit."""

__all__ = [
    "BkprocError",
    "EmbeddingError",
    "SizeLimitError",
    "HorizonExhausted",
    "AlphaDomainError",
    "HermiteRankError",
    "NonpositiveMeanError",
    "DegenerateRenewalError",
    "ConfigError",
    "ExperimentInterrupted",
]


class BkprocError(Exception):
    """Base class for all toolkit errors."""


class EmbeddingError(BkprocError):
    """Circulant embedding produced eigenvalues negative beyond tolerance."""


class SizeLimitError(BkprocError):
    """Requested problem size exceeds a configured guard (O(n^3) paths, allocation caps)."""


class HorizonExhausted(BkprocError):
    """The simulated partial-sum path never exceeds the requested level.

    Signals that the simulation horizon must grow; drivers retry with a
    geometrically larger horizon.
    """


class AlphaDomainError(BkprocError):
    """alpha outside (0, 2 - sqrt(2)), where the pointwise representation and
    the long-memory limit law are not available."""


class HermiteRankError(BkprocError):
    """The subordinating function has |E[G(Z) Z]| below tolerance, so its
    Hermite rank is not 1."""


class NonpositiveMeanError(BkprocError):
    """The subordinated sequence has mean <= 0; positive drift is required."""


class DegenerateRenewalError(BkprocError):
    """sup |mu N(t) - t| vanished (constant increments); the ratio statistic
    is undefined."""


class ConfigError(BkprocError):
    """Invalid experiment or CLI configuration."""


class ExperimentInterrupted(BkprocError):
    """Raised when an experiment stops early on request after checkpointing."""
