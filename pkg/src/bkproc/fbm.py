"""Exact synthesis of fractional Gaussian noise and fractional Brownian motion.

Fractional Brownian motion (fBm) with Hurst index H is the mean-zero Gaussian
process with covariance

    E W_H(s) W_H(t) = (s^{2H} + t^{2H} - |s - t|^{2H}) / 2,

and fractional Gaussian noise (fGn) is its unit-spaced increment sequence,
stationary with autocovariance given by the second difference of t^{2H}.
H = 1/2 recovers the Wiener process / i.i.d. noise.

Two exact generators are provided:

* circulant embedding (Davies-Harte), O(n log n), the default;
* Cholesky factorisation of the Toeplitz covariance, O(n^3), as a small-n
  cross-validation oracle.

Both are deterministic functions of a 64-bit seed.  Paths live on the integer
grid 0..T; evaluation at real times is by linear interpolation with the
convention that a negative time argument yields 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import EmbeddingError, SizeLimitError

__all__ = [
    "HurstParam",
    "FgnSpec",
    "FbmPath",
    "fbm_covariance",
    "fgn_autocovariance",
    "circulant_eigenvalues",
    "generate_fgn",
    "generate_fgn_cholesky",
    "fgn_to_fbm",
    "fbm_at_real_time",
    "fbm_at_real_time_flagged",
]

# Relative tolerance for negative circulant eigenvalues.  The fGn embedding is
# provably nonnegative for H in [1/2, 1); this only absorbs float noise.
EIGENVALUE_TOLERANCE = 1e-10

# generate_fgn_cholesky is an O(n^2)/O(n^3) oracle, not a production path.
CHOLESKY_SIZE_LIMIT = 4096


@dataclass(frozen=True)
class HurstParam:
    """Hurst index H.  1/2 < H < 1 gives long-range dependence; H = 1/2 is
    the Wiener degenerate case."""

    h: float

    def __post_init__(self) -> None:
        if not 0.5 <= self.h < 1.0:
            raise ValueError(f"Hurst index must lie in [1/2, 1), got {self.h}")


def _hvalue(hurst: HurstParam | float) -> float:
    return hurst.h if isinstance(hurst, HurstParam) else float(hurst)


@dataclass(frozen=True)
class FgnSpec:
    """Request for `length` unit-spaced fGn increments from a seeded stream."""

    hurst: HurstParam
    length: int
    seed: int

    def __post_init__(self) -> None:
        if self.length < 1:
            raise ValueError("length must be >= 1")


@dataclass(frozen=True)
class FbmPath:
    """fBm sample on the integer grid 0..T, values[0] == 0."""

    values: np.ndarray
    hurst: HurstParam

    def __post_init__(self) -> None:
        if len(self.values) < 1 or self.values[0] != 0.0:
            raise ValueError("path must start at 0")

    @property
    def horizon(self) -> int:
        return len(self.values) - 1


def fbm_covariance(s: float, t: float, hurst: HurstParam | float) -> float:
    """Covariance of fBm at (s, t): (s^{2H} + t^{2H} - |s-t|^{2H}) / 2."""
    h2 = 2.0 * _hvalue(hurst)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    out = 0.5 * (s**h2 + t**h2 - np.abs(s - t) ** h2)
    return float(out) if out.ndim == 0 else out


def fgn_autocovariance(lag, hurst: HurstParam | float):
    """Autocovariance of unit-spaced fGn at integer lag k.

    gamma(k) = (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) / 2, the second
    difference of t^{2H}; gamma(0) = 1.
    """
    h2 = 2.0 * _hvalue(hurst)
    k = np.asarray(lag, dtype=float)
    out = 0.5 * (np.abs(k + 1) ** h2 - 2.0 * np.abs(k) ** h2 + np.abs(k - 1) ** h2)
    return float(out) if out.ndim == 0 else out


def circulant_eigenvalues(length: int, hurst: HurstParam | float) -> np.ndarray:
    """Eigenvalues of the 2n-circulant embedding the fGn covariance.

    All are >= 0 (up to rounding) for H in [1/2, 1), which is what makes the
    Davies-Harte construction exact.
    """
    gamma = fgn_autocovariance(np.arange(length + 1), hurst)
    first_row = np.concatenate([gamma[:-1], [gamma[length]], gamma[1:-1][::-1]])
    return np.fft.fft(first_row).real


def generate_fgn(spec: FgnSpec) -> np.ndarray:
    """Sample fGn by circulant embedding (Davies-Harte), O(n log n), exact.

    The 2n normal driver variates are drawn from a single seeded stream in a
    fixed documented order (real/imaginary blocks), so the output is a pure
    function of the spec.

    Raises EmbeddingError if an eigenvalue is negative beyond tolerance
    (callers may fall back to generate_fgn_cholesky).
    """
    n = spec.length
    lam = circulant_eigenvalues(n, spec.hurst)
    lam_max = lam.max()
    if lam.min() < -EIGENVALUE_TOLERANCE * lam_max:
        raise EmbeddingError(
            f"negative circulant eigenvalue {lam.min():.3e} (max {lam_max:.3e}) "
            f"for H={spec.hurst.h}, n={n}"
        )
    lam = np.clip(lam, 0.0, None)

    # Driver order: z[0] -> Z_0, z[1] -> Z_n, z[2:n+1] + i z[n+1:2n] -> Z_1..Z_{n-1}.
    rng = np.random.default_rng(spec.seed)
    z = rng.standard_normal(2 * n)
    zc = np.zeros(2 * n, dtype=complex)
    zc[0] = z[0]
    zc[n] = z[1]
    if n > 1:
        half = (z[2 : n + 1] + 1j * z[n + 1 : 2 * n]) / np.sqrt(2.0)
        zc[1:n] = half
        zc[n + 1 :] = np.conj(half[::-1])

    sample = np.fft.ifft(np.sqrt(lam) * zc) * np.sqrt(2.0 * n)
    return np.ascontiguousarray(sample.real[:n])


@lru_cache(maxsize=8)
def _cholesky_factor(length: int, h: float) -> np.ndarray:
    cov = scipy.linalg.toeplitz(fgn_autocovariance(np.arange(length), h))
    factor = scipy.linalg.cholesky(cov, lower=True)
    factor.setflags(write=False)
    return factor


def generate_fgn_cholesky(spec: FgnSpec) -> np.ndarray:
    """Sample fGn through a Cholesky factor of the exact Toeplitz covariance.

    Cross-validation oracle for generate_fgn; guarded to length <= 4096.
    """
    n = spec.length
    if n > CHOLESKY_SIZE_LIMIT:
        raise SizeLimitError(
            f"Cholesky generator limited to length <= {CHOLESKY_SIZE_LIMIT}, got {n}"
        )
    factor = _cholesky_factor(n, spec.hurst.h)
    rng = np.random.default_rng(spec.seed)
    return factor @ rng.standard_normal(n)


def fgn_to_fbm(increments: np.ndarray, hurst: HurstParam | float) -> FbmPath:
    """Cumulate increments into an fBm path on 0..T with W(0) = 0."""
    increments = np.asarray(increments, dtype=float)
    values = np.concatenate([[0.0], np.cumsum(increments)])
    h = hurst if isinstance(hurst, HurstParam) else HurstParam(float(hurst))
    return FbmPath(values=values, hurst=h)


def fbm_at_real_time_flagged(path: FbmPath, t: float) -> tuple[float, bool]:
    """Evaluate the path at real time t; also report clamping beyond T.

    Negative time arguments yield 0 (the convention for out-of-range random
    time arguments); t > T yields values[T] with the flag set.
    """
    if t < 0.0:
        return 0.0, False
    horizon = path.horizon
    if t >= horizon:
        return float(path.values[-1]), t > horizon
    i = int(np.floor(t))
    frac = t - i
    v = path.values
    if frac == 0.0:
        return float(v[i]), False
    return float(v[i] + frac * (v[i + 1] - v[i])), False


def fbm_at_real_time(path: FbmPath, t: float) -> float:
    """Linear interpolation between grid points; 0 below time 0, clamped above T."""
    value, _ = fbm_at_real_time_flagged(path, t)
    return value
