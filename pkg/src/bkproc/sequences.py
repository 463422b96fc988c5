"""Generators for the dependent driving sequences {Y_j}.

Three families, each with its analytic mean/scale constants attached:

* i.i.d. positive variables (Exponential, Gamma, shifted Uniform) with finite
  fourth moment;
* weakly dependent Gaussian-innovation models (MA(q), AR(1)) whose long-run
  standard deviation is known in closed form (MA: sd |sum theta_i|,
  AR(1): sd / (1 - rho)), so the limit laws can be fed analytically;
* long-range dependent subordinated Gaussian moving averages
  eta_j = sum_k psi_k xi_{j-k} with psi_0 = 1, psi_k = k^{-(1+alpha)/2}
  truncated at lag K, standardized to eta~ = eta / sigma and mapped through a
  Hermite-rank-1 function G, Y_j = G(eta~_j).

The moving-average noise xi_{-K..n-1} is drawn from a single seeded stream in
index order and convolved by FFT, so every sequence is a pure function of
(spec, n, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import scipy.signal

from . import theory
from .errors import HermiteRankError, NonpositiveMeanError, SizeLimitError

__all__ = [
    "WeightSpec",
    "Shift",
    "ExpG",
    "Tabulated",
    "GSpec",
    "Exponential",
    "Gamma",
    "ShiftedUniform",
    "IID",
    "MAq",
    "AR1",
    "LRD",
    "ModelSpec",
    "ModelMoments",
    "weights",
    "sigma_eta",
    "generate_eta",
    "subordinate",
    "j1_mu_of",
    "generate_weak",
    "generate",
    "moments_of",
    "theory_params_for",
    "model_to_dict",
    "model_from_dict",
]

# Cap on total noise draws (n + K) for one moving-average realization.
ALLOCATION_CAP = 1 << 25

# |E[G(Z) Z]| below this fails the Hermite-rank-1 requirement.
HERMITE_RANK_TOLERANCE = 1e-8

GAUSS_HERMITE_NODES = 96


# ---------------------------------------------------------------------------
# Moving-average weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightSpec:
    """Hyperbolic weights psi_0 = 1, psi_k = k^{-(1+alpha)/2}, 1 <= k <= K."""

    alpha: float
    truncation: int

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.truncation < 1:
            raise ValueError("truncation must be >= 1")

    def tail_variance(self) -> float:
        """Neglected tail sum_{k>K} psi_k^2, approximately K^{-alpha}/alpha."""
        return self.truncation ** (-self.alpha) / self.alpha


def weights(spec: WeightSpec) -> np.ndarray:
    """The weight vector psi_0..psi_K."""
    k = np.arange(1, spec.truncation + 1, dtype=float)
    return np.concatenate([[1.0], k ** (-0.5 * (1.0 + spec.alpha))])


def sigma_eta(weight_values: np.ndarray) -> float:
    """sqrt(sum psi_k^2), the standard deviation of the truncated average."""
    weight_values = np.asarray(weight_values, dtype=float)
    if weight_values.size == 0:
        raise ValueError("weights must be nonempty")
    return float(np.sqrt(np.dot(weight_values, weight_values)))


def generate_eta(spec: WeightSpec, n: int, seed: int) -> np.ndarray:
    """eta_j = sum_{k=0}^K psi_k xi_{j-k}, j = 0..n-1, by FFT convolution.

    xi_{-K..n-1} are i.i.d. standard normal, drawn in index order from one
    seeded stream; "valid"-mode convolution of that array with the weights
    gives exactly the n outputs.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    k = spec.truncation
    if n + k > ALLOCATION_CAP:
        raise SizeLimitError(
            f"n + K = {n + k} exceeds the allocation cap {ALLOCATION_CAP}"
        )
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(n + k)
    psi = weights(spec)
    return scipy.signal.fftconvolve(noise, psi, mode="valid")


# ---------------------------------------------------------------------------
# Subordinating functions G (Hermite rank 1)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Shift:
    """G(x) = mu0 + x; J_1 = 1 exactly."""

    mu0: float

    def __post_init__(self) -> None:
        if self.mu0 <= 0.0:
            raise NonpositiveMeanError("Shift requires mu0 > 0")

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.mu0 + x


@dataclass(frozen=True)
class ExpG:
    """G(x) = exp(lam x); J_1 = lam e^{lam^2/2}, mu = e^{lam^2/2}."""

    lam: float

    def __post_init__(self) -> None:
        if self.lam == 0.0:
            raise ValueError("ExpG requires lam != 0")

    def apply(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.lam * x)


@dataclass(frozen=True)
class Tabulated:
    """G given as a vectorized callable; moments come from Gauss-Hermite quadrature."""

    fn: Callable[[np.ndarray], np.ndarray]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(x), dtype=float)


GSpec = Union[Shift, ExpG, Tabulated]


def _gauss_hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    # Probabilist's normalization: E f(Z) = sum w_i f(k_i), Z ~ N(0, 1).
    knots, w = np.polynomial.hermite.hermgauss(n)
    return knots * math.sqrt(2.0), w / math.sqrt(math.pi)


def subordinate(eta_tilde: np.ndarray, g: GSpec) -> np.ndarray:
    """Y_j = G(eta~_j) pointwise; input must already be standardized."""
    return g.apply(np.asarray(eta_tilde, dtype=float))


def j1_mu_of(g: GSpec, nodes: int = GAUSS_HERMITE_NODES) -> tuple[float, float]:
    """(J_1, mu) = (E[G(Z) Z], E[G(Z)]) for standard normal Z.

    Closed forms for Shift and ExpG; Gauss-Hermite quadrature (>= 64 nodes)
    for Tabulated.  Raises HermiteRankError when |J_1| < 1e-8 and
    NonpositiveMeanError when mu <= 0.
    """
    if isinstance(g, Shift):
        j1, mu = 1.0, g.mu0
    elif isinstance(g, ExpG):
        mu = math.exp(0.5 * g.lam * g.lam)
        j1 = g.lam * mu
    else:
        if nodes < 64:
            raise ValueError("Tabulated moments need at least 64 quadrature nodes")
        knots, w = _gauss_hermite(nodes)
        vals = g.apply(knots)
        mu = float(w @ vals)
        j1 = float(w @ (vals * knots))
    if abs(j1) < HERMITE_RANK_TOLERANCE:
        raise HermiteRankError(f"|J_1| = {abs(j1):.3e} < {HERMITE_RANK_TOLERANCE}")
    if mu <= 0.0:
        raise NonpositiveMeanError(f"mu = {mu:.6g} <= 0")
    return j1, mu


def _marginal_sd_of_g(g: GSpec, mu: float, nodes: int = GAUSS_HERMITE_NODES) -> float:
    if isinstance(g, Shift):
        return 1.0
    if isinstance(g, ExpG):
        lam2 = g.lam * g.lam
        return math.sqrt(math.exp(2.0 * lam2) - math.exp(lam2))
    knots, w = _gauss_hermite(nodes)
    second = float(w @ (g.apply(knots) ** 2))
    return math.sqrt(max(second - mu * mu, 0.0))


# ---------------------------------------------------------------------------
# Model menu
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self) -> None:
        if self.rate <= 0.0:
            raise ValueError("rate must be > 0")


@dataclass(frozen=True)
class Gamma:
    shape: float
    rate: float

    def __post_init__(self) -> None:
        if self.shape <= 0.0 or self.rate <= 0.0:
            raise ValueError("shape and rate must be > 0")


@dataclass(frozen=True)
class ShiftedUniform:
    a: float
    b: float

    def __post_init__(self) -> None:
        if self.b <= self.a:
            raise ValueError("need a < b")
        if self.a + self.b <= 0.0:
            raise NonpositiveMeanError("uniform mean (a+b)/2 must be > 0")


IidDistribution = Union[Exponential, Gamma, ShiftedUniform]


@dataclass(frozen=True)
class IID:
    distribution: IidDistribution


@dataclass(frozen=True)
class MAq:
    """Y_j = shift + sum_i theta_i eps_{j-i}, eps i.i.d. N(0, sd^2)."""

    innovation_sd: float
    coefficients: tuple[float, ...]
    shift: float

    def __post_init__(self) -> None:
        if self.innovation_sd <= 0.0:
            raise ValueError("innovation sd must be > 0")
        if len(self.coefficients) == 0:
            raise ValueError("need at least theta_0")
        if sum(self.coefficients) == 0.0:
            raise ValueError("sum of coefficients must be nonzero (long-run sd > 0)")
        if self.shift <= 0.0:
            raise NonpositiveMeanError("MA shift (the mean) must be > 0")


@dataclass(frozen=True)
class AR1:
    """Y_j = shift + X_j, X_j = rho X_{j-1} + eps_j, stationary start."""

    rho: float
    innovation_sd: float
    shift: float

    def __post_init__(self) -> None:
        if not -1.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (-1, 1)")
        if self.innovation_sd <= 0.0:
            raise ValueError("innovation sd must be > 0")
        if self.shift <= 0.0:
            raise NonpositiveMeanError("AR shift (the mean) must be > 0")


@dataclass(frozen=True)
class LRD:
    weights: WeightSpec
    g: GSpec


ModelSpec = Union[IID, MAq, AR1, LRD]


@dataclass(frozen=True)
class ModelMoments:
    """Analytic constants attached to a model.

    Weak models report the long-run standard deviation feeding the
    weak-dependence limit laws; long-memory models report (J_1, c) with
    c = J_1 kappa_alpha / sigma_eta instead.
    """

    mu: float
    sigma_marginal: float
    sigma_longrun: float | None = None
    j1: float | None = None
    c: float | None = None

    def __post_init__(self) -> None:
        if self.mu <= 0.0:
            raise NonpositiveMeanError("mu must be > 0")
        if self.sigma_marginal <= 0.0:
            raise ValueError("marginal sigma must be > 0")
        if self.sigma_longrun is not None and self.sigma_longrun <= 0.0:
            raise ValueError("long-run sigma must be > 0")


def moments_of(model: ModelSpec) -> ModelMoments:
    """Mean and scale constants of the model, all in closed form (quadrature
    only for Tabulated G)."""
    if isinstance(model, IID):
        d = model.distribution
        if isinstance(d, Exponential):
            mu, sd = 1.0 / d.rate, 1.0 / d.rate
        elif isinstance(d, Gamma):
            mu, sd = d.shape / d.rate, math.sqrt(d.shape) / d.rate
        else:
            mu, sd = 0.5 * (d.a + d.b), (d.b - d.a) / math.sqrt(12.0)
        return ModelMoments(mu=mu, sigma_marginal=sd, sigma_longrun=sd)
    if isinstance(model, MAq):
        theta = np.asarray(model.coefficients, dtype=float)
        return ModelMoments(
            mu=model.shift,
            sigma_marginal=model.innovation_sd * float(np.sqrt(theta @ theta)),
            sigma_longrun=model.innovation_sd * abs(float(theta.sum())),
        )
    if isinstance(model, AR1):
        return ModelMoments(
            mu=model.shift,
            sigma_marginal=model.innovation_sd / math.sqrt(1.0 - model.rho**2),
            sigma_longrun=model.innovation_sd / (1.0 - model.rho),
        )
    if isinstance(model, LRD):
        j1, mu = j1_mu_of(model.g)
        sigma = sigma_eta(weights(model.weights))
        kappa = theory.kappa_alpha(model.weights.alpha)
        return ModelMoments(
            mu=mu,
            sigma_marginal=_marginal_sd_of_g(model.g, mu),
            j1=j1,
            c=j1 * kappa / sigma,
        )
    raise TypeError(f"unknown model spec {model!r}")


def theory_params_for(model: LRD) -> theory.TheoryParams:
    """TheoryParams bundle for a long-memory model."""
    if not isinstance(model, LRD):
        raise TypeError("theory parameters are defined for LRD models")
    j1, mu = j1_mu_of(model.g)
    sigma = sigma_eta(weights(model.weights))
    return theory.TheoryParams.from_alpha(model.weights.alpha, mu, sigma, j1)


# ---------------------------------------------------------------------------
# Sequence generation
# ---------------------------------------------------------------------------

def generate_weak(model: ModelSpec, n: int, seed: int) -> np.ndarray:
    """Y_1..Y_n for an i.i.d. or weakly dependent model; pure in (model, n, seed)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    if isinstance(model, IID):
        d = model.distribution
        if isinstance(d, Exponential):
            return rng.exponential(1.0 / d.rate, n)
        if isinstance(d, Gamma):
            return rng.gamma(d.shape, 1.0 / d.rate, n)
        return rng.uniform(d.a, d.b, n)
    if isinstance(model, MAq):
        q = len(model.coefficients) - 1
        eps = rng.normal(0.0, model.innovation_sd, n + q)
        y = np.convolve(eps, np.asarray(model.coefficients, dtype=float), mode="valid")
        return model.shift + y
    if isinstance(model, AR1):
        x0 = rng.normal(0.0, model.innovation_sd / math.sqrt(1.0 - model.rho**2))
        eps = rng.normal(0.0, model.innovation_sd, n)
        x = scipy.signal.lfilter([1.0], [1.0, -model.rho], eps, zi=[model.rho * x0])[0]
        return model.shift + x
    raise TypeError(f"generate_weak does not handle {type(model).__name__}")


def generate(model: ModelSpec, n: int, seed: int) -> np.ndarray:
    """Y_1..Y_n for any model kind (dispatcher used by the experiment layer)."""
    if isinstance(model, LRD):
        eta = generate_eta(model.weights, n, seed)
        sigma = sigma_eta(weights(model.weights))
        return subordinate(eta / sigma, model.g)
    return generate_weak(model, n, seed)


# ---------------------------------------------------------------------------
# Config (de)serialization
# ---------------------------------------------------------------------------

def model_to_dict(model: ModelSpec) -> dict:
    """JSON-ready description; inverse of model_from_dict."""
    if isinstance(model, IID):
        d = model.distribution
        if isinstance(d, Exponential):
            dist = {"kind": "exponential", "rate": d.rate}
        elif isinstance(d, Gamma):
            dist = {"kind": "gamma", "shape": d.shape, "rate": d.rate}
        else:
            dist = {"kind": "shifted_uniform", "a": d.a, "b": d.b}
        return {"kind": "iid", "distribution": dist}
    if isinstance(model, MAq):
        return {
            "kind": "maq",
            "innovation_sd": model.innovation_sd,
            "coefficients": list(model.coefficients),
            "shift": model.shift,
        }
    if isinstance(model, AR1):
        return {
            "kind": "ar1",
            "rho": model.rho,
            "innovation_sd": model.innovation_sd,
            "shift": model.shift,
        }
    if isinstance(model, LRD):
        if isinstance(model.g, Shift):
            g = {"kind": "shift", "mu0": model.g.mu0}
        elif isinstance(model.g, ExpG):
            g = {"kind": "exp", "lam": model.g.lam}
        else:
            raise ValueError("Tabulated G has no config representation")
        return {
            "kind": "lrd",
            "alpha": model.weights.alpha,
            "truncation": model.weights.truncation,
            "g": g,
        }
    raise TypeError(f"unknown model spec {model!r}")


def _dist_from_dict(d: dict) -> IidDistribution:
    kind = d.get("kind")
    if kind == "exponential":
        return Exponential(rate=float(d["rate"]))
    if kind == "gamma":
        return Gamma(shape=float(d["shape"]), rate=float(d["rate"]))
    if kind == "shifted_uniform":
        return ShiftedUniform(a=float(d["a"]), b=float(d["b"]))
    raise ValueError(f"unknown iid distribution kind {kind!r}")


def model_from_dict(data: dict) -> ModelSpec:
    kind = data.get("kind")
    if kind == "iid":
        return IID(distribution=_dist_from_dict(data["distribution"]))
    if kind == "maq":
        return MAq(
            innovation_sd=float(data["innovation_sd"]),
            coefficients=tuple(float(c) for c in data["coefficients"]),
            shift=float(data["shift"]),
        )
    if kind == "ar1":
        return AR1(
            rho=float(data["rho"]),
            innovation_sd=float(data["innovation_sd"]),
            shift=float(data["shift"]),
        )
    if kind == "lrd":
        g_data = data["g"]
        if g_data["kind"] == "shift":
            g: GSpec = Shift(mu0=float(g_data["mu0"]))
        elif g_data["kind"] == "exp":
            g = ExpG(lam=float(g_data["lam"]))
        else:
            raise ValueError(f"unknown G kind {g_data['kind']!r}")
        return LRD(
            weights=WeightSpec(
                alpha=float(data["alpha"]), truncation=int(data["truncation"])
            ),
            g=g,
        )
    raise ValueError(f"unknown model kind {kind!r}")
