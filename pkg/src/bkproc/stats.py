"""Empirical-distribution utilities for the verification flows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EmpiricalSample",
    "ecdf",
    "ks_distance",
    "quantile",
    "exceedance_fraction",
]


@dataclass(frozen=True)
class EmpiricalSample:
    """A sample kept in sorted order for binary-search queries."""

    values: np.ndarray
    n: int

    @classmethod
    def from_values(cls, values) -> "EmpiricalSample":
        arr = np.sort(np.asarray(values, dtype=float))
        if arr.size == 0:
            raise ValueError("sample must be nonempty")
        return cls(values=arr, n=int(arr.size))


def ecdf(sample: EmpiricalSample, y) -> float | np.ndarray:
    """F_n(y) = #{values <= y} / n."""
    counts = np.searchsorted(sample.values, y, side="right")
    out = counts / sample.n
    return float(out) if np.ndim(y) == 0 else out


def _as_cdf_values(cdf, values: np.ndarray) -> np.ndarray:
    # vectorized evaluation when the reference supports it, else pointwise
    fn = cdf.cdf if hasattr(cdf, "cdf") else cdf
    try:
        out = np.asarray(fn(values), dtype=float)
        if out.shape == values.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(fn(v)) for v in values])


def ks_distance(sample: EmpiricalSample, cdf) -> float:
    """sup_y |F_n(y) - F(y)| against a reference CDF (callable or object with
    a .cdf method), taking both one-sided deviations at every order statistic."""
    f = _as_cdf_values(cdf, sample.values)
    i = np.arange(1, sample.n + 1)
    upper = np.max(i / sample.n - f)
    lower = np.max(f - (i - 1) / sample.n)
    return float(max(upper, lower))


def quantile(sample: EmpiricalSample, p: float) -> float:
    """Order-statistic quantile with lower interpolation; p in [0, 1]."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return float(np.quantile(sample.values, p, method="lower"))


def exceedance_fraction(samples, threshold: float) -> float:
    """Fraction of entries strictly above the threshold."""
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise ValueError("samples must be nonempty")
    return float(np.mean(arr > threshold))
