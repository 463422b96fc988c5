"""Partial sums, renewals and the sum/renewal deviation process.

For a driving sequence Y_1, Y_2, ... with mean mu > 0:

    S(t) = sum_{i <= floor(t)} Y_i            (right-continuous step path)
    N(t) = inf { s >= 1 : S(s) > t }          (first passage, integer-valued)
    Q(t) = S(t) + mu N(mu t) - 2 mu t         (deviation process)

Since S need not be monotone, N is computed through the running maximum of
S(1..n), which makes first-passage queries binary searches.

"Coupled modes" build Y directly from a simulated Gaussian driver,
Y_i = mu + scale * (W(i) - W(i-1)) with W a Wiener path (scale = sigma) or a
fractional Brownian path with index 1 - alpha/2 (scale = J1 kappa_alpha /
sigma).  Then S(t) - mu t - scale W(t) vanishes up to rounding at integer
times, so the pathwise representations of Q and of the renewal deviation can
be checked directly with zero coupling error.  Sup statistics are taken over
the integer grid, where the processes actually jump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import AlphaDomainError, DegenerateRenewalError, HorizonExhausted
from .fbm import FbmPath, FgnSpec, HurstParam, fbm_at_real_time, fgn_to_fbm, generate_fgn
from .theory import TheoryParams, check_alpha_domain

__all__ = [
    "SumPath",
    "QCheckpointSeries",
    "CoupledPath",
    "CoupledWienerSpec",
    "CoupledFbmSpec",
    "FbmRepresentationErrors",
    "partial_sums",
    "sum_at",
    "renewal",
    "renewal_many",
    "q_at",
    "q_process",
    "default_horizon",
    "coupled_wiener",
    "coupled_fbm",
    "representation_error_wiener",
    "representation_error_fbm",
    "ratio_statistic",
]


@dataclass(frozen=True)
class SumPath:
    """Y_1..Y_n with drift mu and the cumulative path S(0)..S(n)."""

    y: np.ndarray
    mu: float
    cumulative: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.y)

    @cached_property
    def running_max(self) -> np.ndarray:
        """M[i] = max(S(1), ..., S(i+1)); nondecreasing, drives first passage."""
        return np.maximum.accumulate(self.cumulative[1:])


def partial_sums(y: np.ndarray, mu: float) -> SumPath:
    """Build the cumulative path; S(0) = 0, S(k) - S(k-1) = Y_k."""
    if mu <= 0.0:
        raise ValueError("mu must be > 0")
    y = np.ascontiguousarray(y, dtype=float)
    cumulative = np.concatenate([[0.0], np.cumsum(y)])
    return SumPath(y=y, mu=float(mu), cumulative=cumulative)


def sum_at(path: SumPath, t: float) -> float:
    """S(t) = S(floor(t)); defined for 0 <= t <= horizon."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    idx = int(math.floor(t))
    if idx > path.horizon:
        raise HorizonExhausted(f"S({t}) beyond simulated horizon {path.horizon}")
    return float(path.cumulative[idx])


def renewal_many(path: SumPath, levels: np.ndarray) -> np.ndarray:
    """Vectorized N(t): the smallest integer n >= 1 with S(n) > t.

    The infimum over real s >= 1 is attained at an integer because S is a
    right-continuous step path.  Raises HorizonExhausted if the running
    maximum never exceeds some queried level.
    """
    levels = np.asarray(levels, dtype=float)
    m = path.running_max
    if levels.size and m[-1] <= levels.max():
        raise HorizonExhausted(
            f"running max {m[-1]:.6g} never exceeds level {levels.max():.6g}; "
            "grow the horizon"
        )
    n = np.searchsorted(m, levels, side="right") + 1
    # First-passage characterization, checked on every query:
    # S(N) > t and max(S(1..N-1)) <= t (hence S(N-1) <= t) when N > 1.
    assert np.all(path.cumulative[n] > levels)
    gt1 = n > 1
    assert np.all(m[n[gt1] - 2] <= levels[gt1])
    return n


def renewal(path: SumPath, t: float) -> int:
    """N(t) for a single level t >= 0."""
    if t < 0.0:
        raise ValueError("renewal level must be >= 0")
    return int(renewal_many(path, np.array([t]))[0])


def q_at(path: SumPath, t: float) -> float:
    """Q(t) = S(t) + mu N(mu t) - 2 mu t."""
    mu = path.mu
    return sum_at(path, t) + mu * renewal(path, mu * t) - 2.0 * mu * t


@dataclass(frozen=True)
class QCheckpointSeries:
    """Q at requested checkpoints plus integer-grid sup statistics up to T.

    sup_abs_q_scaled is the sup of |Q(t/mu)| over integer t <= T (the form
    the weak-dependence normalizations use); for mu = 1 it coincides with
    sup_abs_q.
    """

    checkpoints: np.ndarray
    q: np.ndarray
    sup_abs_q: float
    sup_abs_q_scaled: float
    sup_abs_renewal: float
    horizon: int


def q_process(path: SumPath, t_list, sup_horizon: float | None = None) -> QCheckpointSeries:
    """Evaluate Q at the checkpoints and the sup statistics over all integer
    t <= T (T = sup_horizon when given, else max(t_list))."""
    t_arr = np.atleast_1d(np.asarray(t_list, dtype=float))
    if t_arr.size == 0:
        raise ValueError("need at least one checkpoint")
    if np.any(t_arr < 0.0):
        raise ValueError("checkpoints must be >= 0")
    if np.any(np.diff(t_arr) <= 0.0):
        raise ValueError("checkpoints must be strictly increasing")
    mu = path.mu
    horizon = path.horizon
    t_max = float(t_arr[-1]) if sup_horizon is None else max(float(sup_horizon), t_arr[-1])
    if math.floor(t_max) > horizon or math.floor(t_max / mu) > horizon:
        raise HorizonExhausted("checkpoint beyond simulated horizon")

    q_checkpoints = (
        path.cumulative[np.floor(t_arr).astype(np.int64)]
        + mu * renewal_many(path, mu * t_arr)
        - 2.0 * mu * t_arr
    )

    ts = np.arange(0, int(math.floor(t_max)) + 1, dtype=np.int64)
    n_at_mu_t = renewal_many(path, mu * ts)
    q_grid = path.cumulative[ts] + mu * n_at_mu_t - 2.0 * mu * ts

    n_at_t = renewal_many(path, ts.astype(float))
    q_scaled = (
        path.cumulative[np.floor(ts / mu).astype(np.int64)]
        + mu * n_at_t
        - 2.0 * ts
    )
    renewal_dev = np.abs(mu * n_at_t - ts)

    return QCheckpointSeries(
        checkpoints=t_arr,
        q=q_checkpoints,
        sup_abs_q=float(max(np.abs(q_grid).max(), np.abs(q_checkpoints).max())),
        sup_abs_q_scaled=float(np.abs(q_scaled).max()),
        sup_abs_renewal=float(renewal_dev.max()),
        horizon=horizon,
    )


def default_horizon(t: float, mu: float) -> int:
    """Simulation horizon for renewal queries up to level mu T: since
    N(mu T) grows like T almost surely, 2T/mu plus a sqrt(T) margin suffices
    in practice; callers grow geometrically on HorizonExhausted."""
    return math.ceil(2.0 * t / mu) + 64 * math.ceil(math.sqrt(t))


# ---------------------------------------------------------------------------
# Coupled modes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoupledWienerSpec:
    """Y_i = mu + sigma (W(i) - W(i-1)) with W a Wiener path."""

    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if self.mu <= 0.0:
            raise ValueError("mu must be > 0")
        if self.sigma < 0.0:
            raise ValueError("sigma must be >= 0")


@dataclass(frozen=True)
class CoupledFbmSpec:
    """Y_j = mu + c (W_H(j) - W_H(j-1)), H = 1 - alpha/2, c = J1 kappa/sigma.

    Parameterized by (alpha, mu, c); internally realized with j1 = 1 and
    sigma = kappa_alpha / c, which reproduces the requested c.
    """

    alpha: float
    mu: float
    c: float

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.mu <= 0.0:
            raise ValueError("mu must be > 0")
        if self.c == 0.0:
            raise ValueError("c must be nonzero")

    def theory_params(self) -> TheoryParams:
        from .theory import kappa_alpha

        return TheoryParams.from_alpha(
            self.alpha, self.mu, kappa_alpha(self.alpha) / self.c, 1.0
        )


@dataclass(frozen=True)
class CoupledPath:
    """A driver path together with the sum path built from its increments.

    The strong-approximation error is identically zero at integer times by
    construction (beta_proxy = 0).  params carries the full long-memory
    constant bundle in fbm mode and is None in Wiener mode, where (mu, scale)
    suffice.
    """

    driver: FbmPath
    sum: SumPath
    mu: float
    scale: float
    params: TheoryParams | None = None
    beta_proxy: float = 0.0


_COUPLED_HORIZON_CAP = 1 << 25


def _build_coupled(t: int, mu: float, scale: float, hurst: HurstParam, seed: int,
                   params: TheoryParams | None) -> CoupledPath:
    """Driver on [0, L] starting at L = 2T (slack for the random time
    arguments and first passage at level mu T); L doubles deterministically
    whenever the realized path has not yet crossed mu T."""
    if t < 1:
        raise ValueError("T must be >= 1")
    need = max(float(t), mu * t)
    length = 2 * t
    while True:
        fgn = generate_fgn(FgnSpec(hurst=hurst, length=length, seed=seed))
        y = mu + scale * fgn
        path = partial_sums(y, mu)
        if path.running_max[-1] > need and length >= t / mu:
            return CoupledPath(
                driver=fgn_to_fbm(fgn, hurst), sum=path, mu=mu, scale=scale,
                params=params,
            )
        length *= 2
        if length > _COUPLED_HORIZON_CAP:
            raise HorizonExhausted(
                f"coupled driver cap {_COUPLED_HORIZON_CAP} reached before S "
                f"exceeded {need:.6g}"
            )


def coupled_wiener(t: float, mu: float, sigma: float, seed: int) -> CoupledPath:
    """Coupled Wiener mode: Y_i = mu + sigma (W(i) - W(i-1))."""
    spec = CoupledWienerSpec(mu=mu, sigma=sigma)
    return _build_coupled(int(t), spec.mu, spec.sigma, HurstParam(0.5), seed, None)


def coupled_fbm(t: float, params: TheoryParams, seed: int) -> CoupledPath:
    """Coupled long-memory mode: Y_j = mu + c (W_H(j) - W_H(j-1)), H = 1 - alpha/2."""
    return _build_coupled(int(t), params.mu, params.c, params.hurst_param, seed, params)


def representation_error_wiener(cp: CoupledPath, t: float) -> float:
    """| Q(T) - sigma (W(T) - W(T - (sigma/mu) W(T))) |, the pointwise
    deviation of the random-time-increment representation; o(T^{1/4}) as
    T grows."""
    t = int(t)
    mu, sigma = cp.mu, cp.scale
    q = q_at(cp.sum, t)
    w_t = float(cp.driver.values[t])
    w_back = fbm_at_real_time(cp.driver, t - (sigma / mu) * w_t)
    return abs(q - sigma * (w_t - w_back))


@dataclass(frozen=True)
class FbmRepresentationErrors:
    """The three deviations of the long-memory representations at horizon T,
    raw and divided by their target rates T^{rate + delta}."""

    err_renewal: float  # sup_t |mu N(mu t) - mu t + c W_H(t)|   vs T^{(1-a/2)^2+d}
    err_q: float        # |Q(T) - c (W_H(T) - W_H(N(mu T)))|     vs T^{gamma/2+d}
    err_prop: float     # |mu T - mu N(mu T) - c W_H(T - (c/mu) W_H(T))| vs T^{gamma/2+d}
    ratio_renewal: float
    ratio_q: float
    ratio_prop: float
    delta: float


def representation_error_fbm(cp: CoupledPath, t: float, delta: float = 0.05
                             ) -> FbmRepresentationErrors:
    """Pathwise deviations of the long-memory renewal and deviation-process
    representations; available for alpha in (0, 2 - sqrt(2)) only."""
    t = int(t)
    params = cp.params
    if params is None:
        raise ValueError("representation_error_fbm needs a coupled fbm path")
    if not check_alpha_domain(params.alpha):
        raise AlphaDomainError(
            f"alpha={params.alpha} outside (0, 2 - sqrt(2)); the pointwise "
            "representation is not available"
        )
    mu, c = cp.mu, cp.scale
    w = cp.driver.values

    ts = np.arange(0, t + 1, dtype=np.int64)
    n_grid = renewal_many(cp.sum, mu * ts.astype(float))
    err_renewal = float(
        np.abs(mu * n_grid - mu * ts + c * w[ts]).max()
    )

    q_t = q_at(cp.sum, t)
    n_t = renewal(cp.sum, mu * t)
    w_at_n = fbm_at_real_time(cp.driver, n_t)
    err_q = abs(q_t - c * (w[t] - w_at_n))

    w_back = fbm_at_real_time(cp.driver, t - (c / mu) * w[t])
    err_prop = abs(mu * t - mu * n_t - c * w_back)

    gamma_rate = t ** (0.5 * params.gamma + delta)
    renewal_rate = t ** ((1.0 - 0.5 * params.alpha) ** 2 + delta)
    return FbmRepresentationErrors(
        err_renewal=err_renewal,
        err_q=err_q,
        err_prop=err_prop,
        ratio_renewal=err_renewal / renewal_rate,
        ratio_q=err_q / gamma_rate,
        ratio_prop=err_prop / gamma_rate,
        delta=delta,
    )


def ratio_statistic(series: QCheckpointSeries, t: float) -> float:
    """sup_{t<=T} |Q(t/mu)| / ((log T)^{1/2} (sup_{t<=T} |mu N(t) - t|)^{1/2}).

    Converges (logarithmically slowly) to sigma / mu^{1/2}; reported as a
    diagnostic.  Degenerate constant increments make the denominator vanish.
    """
    t = float(t)
    if t < 16.0:
        raise ValueError("ratio statistic needs T >= 16")
    if series.sup_abs_renewal == 0.0:
        raise DegenerateRenewalError("renewal deviation sup is zero (Y constant)")
    return series.sup_abs_q_scaled / (
        math.sqrt(math.log(t)) * math.sqrt(series.sup_abs_renewal)
    )
