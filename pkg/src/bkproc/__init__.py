"""Simulation and numerical verification of Bahadur-Kiefer type processes
for sums and renewals under weak and long-range dependence."""

from . import cli, fbm, montecarlo, processes, sequences, stats, theory
from .errors import (
    AlphaDomainError,
    BkprocError,
    ConfigError,
    DegenerateRenewalError,
    EmbeddingError,
    ExperimentInterrupted,
    HermiteRankError,
    HorizonExhausted,
    NonpositiveMeanError,
    SizeLimitError,
)

__all__ = [
    "cli",
    "fbm",
    "montecarlo",
    "processes",
    "sequences",
    "stats",
    "theory",
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

__version__ = "0.1.0"
