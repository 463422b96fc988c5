"""Closed-form and quadrature-computed limit-law objects.

Everything the verification flows compare simulations against lives here:

* the moving-average covariance constant  b_a = Int_0^inf x^{-(1+a)/2} (1+x)^{-(1+a)/2} dx
  (equal to Beta((1-a)/2, a), used as an independent cross-check);
* the strong-approximation scale  kappa_a^2 = 2 b_a / ((1-a)(2-a))  and the
  rate exponent gamma(a) = 2-2a for a < 1/2, 1 otherwise;
* the limiting distributions of the normalized sum/renewal deviation process,
  both the weak-dependence form (scaled normal mixture over |x|^{-1/2}) and the
  long-memory form (normal mixture over |x|^{-(1-a/2)});
* exact Gaussian samplers that serve as independent oracles for those CDFs,
  including the finite-horizon bivariate-normal construction whose law
  converges to the long-memory limit;
* iterated-logarithm envelopes and the Riemann-Liouville functional machinery
  (T_H, k_H and the extremal increasing profile) behind the limsup constants.

Quadrature policy: the outer Gaussian integrals are truncated at |x| <= 8
(tail mass 2(1-Phi(8)) < 1e-15) and the integrable singularity at x = 0 is
removed by splitting at |x| = 1e-3 and substituting x = v^2 on the inner
piece, after which fixed Gauss-Legendre rules converge to ~1e-12.  Improper
integrals on (0, inf) are mapped to (0, 1] by explicit substitutions chosen
to cancel the endpoint singularities exactly, so no truncation error enters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy.integrate import quad
from scipy.special import beta as _beta_function
from scipy.special import ndtr

from .errors import AlphaDomainError
from .fbm import HurstParam

__all__ = [
    "ALPHA_DOMAIN_UPPER",
    "TheoryParams",
    "LimitCdf",
    "QuadratureSettings",
    "PrelimitDraws",
    "b_alpha",
    "b_alpha_beta_identity",
    "kappa_alpha",
    "gamma_exponent",
    "check_alpha_domain",
    "limit_cdf_iid",
    "limit_cdf_lrd",
    "iid_limit_sampler",
    "prelimit_lrd_sampler",
    "prelimit_transform",
    "lil_envelope_iid",
    "lil_envelope_lrd",
    "ortega_envelope",
    "strassen_kH",
    "strassen_kH_components",
    "riemann_liouville_TH",
    "extremal_profile_generator",
    "profile_f",
    "lower_bound_profile",
]

# Upper end of the alpha range where the pointwise representation of the
# deviation process (and hence its limit law) holds: gamma/2 < (1 - a/2)^2.
ALPHA_DOMAIN_UPPER = 2.0 - math.sqrt(2.0)

_QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-12, limit=400)


# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

def _require_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def b_alpha(alpha: float) -> float:
    """Covariance constant b_a = Int_0^inf x^{-(1+a)/2} (1+x)^{-(1+a)/2} dx.

    Computed by adaptive quadrature after substitutions that flatten both the
    x -> 0 singularity and the tail:

      x in [0, 1]:   x = u^{2/(1-a)}  gives a smooth integrand on [0, 1];
      x in [1, inf): x = 1/w, then w = v^{1/a}, again smooth on [0, 1].

    Cross-check against the closed form Beta((1-a)/2, a) is a test contract,
    not an implementation shortcut.
    """
    alpha = _require_alpha(alpha)
    e = 0.5 * (1.0 + alpha)
    p = 2.0 / (1.0 - alpha)

    def inner(u: float) -> float:
        return p * (1.0 + u**p) ** -e

    def outer(v: float) -> float:
        return (1.0 + v ** (1.0 / alpha)) ** -e / alpha

    lo, _ = quad(inner, 0.0, 1.0, **_QUAD_OPTS)
    hi, _ = quad(outer, 0.0, 1.0, **_QUAD_OPTS)
    return lo + hi


def b_alpha_beta_identity(alpha: float) -> float:
    """Closed form b_a = Beta((1-a)/2, a); dual route for the quadrature."""
    alpha = _require_alpha(alpha)
    return float(_beta_function(0.5 * (1.0 - alpha), alpha))


def kappa_alpha(alpha: float) -> float:
    """kappa_a = sqrt(2 b_a / ((1-a)(2-a))), the long-memory approximation scale."""
    alpha = _require_alpha(alpha)
    return math.sqrt(2.0 * b_alpha_beta_identity(alpha) / ((1.0 - alpha) * (2.0 - alpha)))


def gamma_exponent(alpha: float) -> float:
    """Strong-approximation rate exponent: 2 - 2a below 1/2, then 1."""
    alpha = _require_alpha(alpha)
    return 2.0 - 2.0 * alpha if alpha < 0.5 else 1.0


def check_alpha_domain(alpha: float) -> bool:
    """True iff 0 < a < 2 - sqrt(2), equivalently gamma/2 < (1 - a/2)^2."""
    return 0.0 < alpha < ALPHA_DOMAIN_UPPER


def _require_alpha_domain(alpha: float) -> float:
    if not check_alpha_domain(alpha):
        raise AlphaDomainError(
            f"alpha={alpha} outside (0, {ALPHA_DOMAIN_UPPER:.6f})"
        )
    return float(alpha)


# ---------------------------------------------------------------------------
# Parameter bundle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TheoryParams:
    """Every constant the long-memory limit laws need.

    hurst = 1 - alpha/2, gamma = gamma_exponent(alpha) and
    c = j1 * kappa_alpha / sigma are derived fields; build instances through
    from_alpha so they stay consistent.
    """

    alpha: float
    hurst: float
    mu: float
    sigma: float
    j1: float
    kappa_alpha: float
    c: float
    gamma: float

    def __post_init__(self) -> None:
        _require_alpha(self.alpha)
        if self.mu <= 0.0:
            raise ValueError("mu must be > 0")
        if self.sigma <= 0.0:
            raise ValueError("sigma must be > 0")
        if self.j1 == 0.0 or self.c == 0.0:
            raise ValueError("j1 (hence c) must be nonzero")
        if abs(self.hurst - (1.0 - 0.5 * self.alpha)) > 1e-12:
            raise ValueError("hurst must equal 1 - alpha/2")
        if abs(self.gamma - gamma_exponent(self.alpha)) > 1e-12:
            raise ValueError("gamma inconsistent with alpha")
        if abs(self.c - self.j1 * self.kappa_alpha / self.sigma) > 1e-9 * abs(self.c):
            raise ValueError("c inconsistent with j1 * kappa_alpha / sigma")

    @classmethod
    def from_alpha(cls, alpha: float, mu: float, sigma: float, j1: float) -> "TheoryParams":
        alpha = _require_alpha(alpha)
        kappa = kappa_alpha(alpha)
        return cls(
            alpha=alpha,
            hurst=1.0 - 0.5 * alpha,
            mu=float(mu),
            sigma=float(sigma),
            j1=float(j1),
            kappa_alpha=kappa,
            c=float(j1) * kappa / float(sigma),
            gamma=gamma_exponent(alpha),
        )

    @property
    def hurst_param(self) -> HurstParam:
        return HurstParam(self.hurst)


# ---------------------------------------------------------------------------
# Limiting CDFs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSettings:
    """Fixed-rule settings for the outer Gaussian mixture integrals."""

    inner_nodes: int = 160
    outer_nodes: int = 320
    split: float = 1e-3
    xmax: float = 8.0

    @property
    def tail_bound(self) -> float:
        # Truncating the Gaussian integral at |x| <= xmax; Phi factors are in [0, 1].
        return float(4.0 * ndtr(-self.xmax))


def _gauss_legendre(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * t + 0.5 * (b + a), 0.5 * (b - a) * w


@lru_cache(maxsize=None)
def _half_line_rule(settings: QuadratureSettings) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for Int_0^xmax phi(x) f(x) dx with f smooth away from 0.

    The [0, split] piece is computed in the variable x = v^2, which absorbs
    the |x|^{-q} (q < 1) factors the mixture integrands carry near 0.
    """
    phi = lambda x: np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    v, wv = _gauss_legendre(0.0, math.sqrt(settings.split), settings.inner_nodes)
    x_inner = v * v
    w_inner = wv * 2.0 * v * phi(x_inner)
    x_outer, w_outer = _gauss_legendre(settings.split, settings.xmax, settings.outer_nodes)
    w_outer = w_outer * phi(x_outer)
    x = np.concatenate([x_inner, x_outer])
    w = np.concatenate([w_inner, w_outer])
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w

_CHUNK = 16384


def _mixture_cdf(scale_y: np.ndarray, neg_exponent: float,
                 settings: QuadratureSettings) -> np.ndarray:
    """Evaluate Int_0^xmax phi(x) Phi(scale_y * x^{-neg_exponent}) dx, vectorized in y."""
    x, w = _half_line_rule(settings)
    powx = x ** (-neg_exponent)
    out = np.empty_like(scale_y)
    for start in range(0, len(scale_y), _CHUNK):
        block = scale_y[start : start + _CHUNK]
        out[start : start + _CHUNK] = ndtr(block[:, None] * powx[None, :]) @ w
    return out


def limit_cdf_iid(y, mu: float, sigma: float,
                  settings: QuadratureSettings = QuadratureSettings()):
    """Limiting CDF of T^{-1/4} |Q(T/mu)| in the weak-dependence regime.

    F(y) = 2 Int phi(x) Phi(y mu^{3/4} sigma^{-3/2} |x|^{-1/2}) dx - 1 for
    y >= 0; the limit variable is nonnegative, so F(y) = 0 for y < 0.
    """
    if mu <= 0.0 or sigma <= 0.0:
        raise ValueError("mu and sigma must be > 0")
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    a = y_arr * mu**0.75 / sigma**1.5
    out = 4.0 * _mixture_cdf(a, 0.5, settings) - 1.0
    out[y_arr < 0.0] = 0.0
    np.clip(out, 0.0, 1.0, out=out)
    return float(out[0]) if np.ndim(y) == 0 else out


def limit_cdf_lrd(y, params: TheoryParams,
                  settings: QuadratureSettings = QuadratureSettings()):
    """Limiting CDF of T^{-(1-a/2)^2} Q(T) in the long-memory regime.

    F(y) = Int phi(x) Phi(y sigma^{2-a/2} mu^{1-a/2}
                          / (|x|^{1-a/2} |J1 kappa_a|^{2-a/2})) dx,
    a signed, symmetric law (F(y) + F(-y) = 1).  |J1 kappa_a| is used so that
    the fractional power is defined for either sign of J1; the law itself is
    symmetric, so the sign of J1 does not affect it.
    """
    _require_alpha_domain(params.alpha)
    a = params.alpha
    expo = 2.0 - 0.5 * a
    d = params.sigma**expo * params.mu ** (1.0 - 0.5 * a) / abs(
        params.j1 * params.kappa_alpha
    ) ** expo
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    out = 2.0 * _mixture_cdf(d * y_arr, 1.0 - 0.5 * a, settings)
    np.clip(out, 0.0, 1.0, out=out)
    return float(out[0]) if np.ndim(y) == 0 else out


@dataclass(frozen=True)
class LimitCdf:
    """A numerically integrable limiting CDF with its quadrature settings.

    kind is "iid" (nonnegative limit of the weak-dependence regime, needs
    mu/sigma only) or "lrd" (signed long-memory limit, needs TheoryParams).
    """

    kind: str
    mu: float = 1.0
    sigma: float = 1.0
    params: TheoryParams | None = None
    settings: QuadratureSettings = field(default_factory=QuadratureSettings)

    def __post_init__(self) -> None:
        if self.kind not in ("iid", "lrd"):
            raise ValueError(f"unknown limit CDF kind {self.kind!r}")
        if self.kind == "lrd" and self.params is None:
            raise ValueError("lrd limit CDF requires TheoryParams")

    def cdf(self, y):
        if self.kind == "iid":
            return limit_cdf_iid(y, self.mu, self.sigma, self.settings)
        return limit_cdf_lrd(y, self.params, self.settings)

    __call__ = cdf


# ---------------------------------------------------------------------------
# Sampler oracles
# ---------------------------------------------------------------------------

def iid_limit_sampler(mu: float, sigma: float, n_samples: int, seed: int) -> np.ndarray:
    """Exact draws from the weak-dependence limit law.

    V = (sigma^{3/2} / mu^{3/4}) |X|^{1/2} |Z| with X, Z independent standard
    normals; P(V <= y) equals limit_cdf_iid(y, mu, sigma) by conditioning on X.
    """
    if mu <= 0.0 or sigma <= 0.0:
        raise ValueError("mu and sigma must be > 0")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n_samples)
    z = rng.standard_normal(n_samples)
    return sigma**1.5 / mu**0.75 * np.sqrt(np.abs(x)) * np.abs(z)


class PrelimitDraws(NamedTuple):
    values: np.ndarray
    n_clamped: int


def prelimit_transform(x: np.ndarray, z: np.ndarray, t_scale: float,
                       params: TheoryParams) -> PrelimitDraws:
    """Deterministic kernel of the finite-horizon long-memory sampler.

    Given standard normal drivers (x, z), returns exact samples of

        c T^{a/2 - a^2/4} (W(1) - W(u)),   u = 1 - c1 x T^{-a/2},

    where W is fractional Brownian motion with index 1 - a/2 rescaled to
    [0, 1], W(1) = x, c = J1 kappa_a / sigma and c1 = c / mu.  W(u) is drawn
    from its exact conditional law given W(1) = x: normal with mean
    r sigma2 x and variance sigma2^2 (1 - r^2), sigma2^2 = u^{2-a},
    r = (1 + u^{2-a} - |1-u|^{2-a}) / (2 sigma2).  When u <= 0 the value
    W(u) = 0 is used (the out-of-range convention) and the clamp is counted.
    """
    a = params.alpha
    c1 = params.c / params.mu
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    u = 1.0 - c1 * x * t_scale ** (-0.5 * a)
    scale = params.c * t_scale ** (0.5 * a - 0.25 * a * a)

    out = np.empty_like(x)
    clamped = u <= 0.0
    out[clamped] = scale * x[clamped]

    ok = ~clamped
    uu = u[ok]
    s2sq = uu ** (2.0 - a)
    cross = 0.5 * (1.0 + s2sq - np.abs(1.0 - uu) ** (2.0 - a))  # r * sigma2
    cond_var = np.clip(s2sq - cross * cross, 0.0, None)
    w_u = cross * x[ok] + np.sqrt(cond_var) * z[ok]
    out[ok] = scale * (x[ok] - w_u)
    return PrelimitDraws(out, int(clamped.sum()))


def prelimit_lrd_sampler(t_scale: float, params: TheoryParams, n_samples: int,
                         seed: int) -> PrelimitDraws:
    """Exact finite-horizon samples whose law converges to limit_cdf_lrd.

    t_scale plays the role of the horizon T; convergence in T is glacial
    (the conditional-mean term decays like T^{-a^2/4}), which is precisely
    what the two-point comparison tests make visible.
    """
    if t_scale <= 1.0:
        raise ValueError("t_scale must exceed 1")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n_samples)
    z = rng.standard_normal(n_samples)
    return prelimit_transform(x, z, t_scale, params)


# ---------------------------------------------------------------------------
# Iterated-logarithm envelopes
# ---------------------------------------------------------------------------

def _require_horizon(t: float) -> float:
    # log log T must be positive, so the envelopes live on T > e.
    t = float(t)
    if t <= math.e:
        raise ValueError("envelope defined for T > e (log log T must be positive)")
    return t


def lil_envelope_iid(t: float, mu: float, sigma: float) -> float:
    """(2^{1/4} sigma^{3/2} / mu^{3/4}) (T log log T)^{1/4} (log T)^{1/2}."""
    t = _require_horizon(t)
    if mu <= 0.0 or sigma < 0.0:
        raise ValueError("need mu > 0 and sigma >= 0")
    const = 2.0**0.25 * sigma**1.5 / mu**0.75
    return const * (t * math.log(math.log(t))) ** 0.25 * math.log(t) ** 0.5


def lil_envelope_lrd(t: float, params: TheoryParams) -> float:
    """Long-memory limsup envelope

    (2^{1-a/4} |J1 kappa_a|^{2-a/2} / (sigma^{2-a/2} mu^{1-a/2}))
        * T^{(1-a/2)^2} (log log T)^{1/2-a/4} (log T)^{1/2}.
    """
    t = _require_horizon(t)
    a = _require_alpha_domain(params.alpha)
    expo = 2.0 - 0.5 * a
    const = (
        2.0 ** (1.0 - 0.25 * a)
        * abs(params.j1 * params.kappa_alpha) ** expo
        / (params.sigma**expo * params.mu ** (1.0 - 0.5 * a))
    )
    return (
        const
        * t ** ((1.0 - 0.5 * a) ** 2)
        * math.log(math.log(t)) ** (0.5 - 0.25 * a)
        * math.log(t) ** 0.5
    )


def ortega_envelope(t: float, a_t: float, hurst: HurstParam | float) -> float:
    """Increment envelope a_T^H (2 (log(T/a_T) + log log T))^{1/2}.

    With a_T = T this is the classical iterated-logarithm normalizer
    T^H (2 log log T)^{1/2}.
    """
    t = _require_horizon(t)
    if not 0.0 < a_t <= t:
        raise ValueError("need 0 < a_T <= T")
    h = hurst.h if isinstance(hurst, HurstParam) else float(hurst)
    return a_t**h * math.sqrt(2.0 * (math.log(t / a_t) + math.log(math.log(t))))


# ---------------------------------------------------------------------------
# Strassen-ball machinery: k_H, T_H and the extremal profile
# ---------------------------------------------------------------------------

def _require_hurst(hurst: HurstParam | float) -> float:
    h = hurst.h if isinstance(hurst, HurstParam) else float(hurst)
    if not 0.5 <= h < 1.0:
        raise ValueError(f"Hurst index must lie in [1/2, 1), got {h}")
    return h


def strassen_kH_components(hurst: HurstParam | float) -> tuple[float, float]:
    """The two integrals making up k_H^2, each by quadrature.

    first  = Int_0^inf ((1+x)^{H-1/2} - x^{H-1/2})^2 dx, computed exactly on
             a compact interval via w = 1/(1+x) followed by w = v^{1/(1-2a)}
             (a = H - 1/2), which removes the w^{-2a} endpoint singularity;
             no truncation error.
    second = Int_0^1 (1-s)^{2H-1} ds, whose closed form 1/(2H) is the
             internal cross-check.
    """
    h = _require_hurst(hurst)
    a = h - 0.5

    if a == 0.0:
        first = 0.0
    else:
        s = 1.0 / (1.0 - 2.0 * a)

        def integrand(v: float) -> float:
            w = v**s
            ratio = -math.expm1(a * math.log1p(-w)) / w if w > 0.0 else a
            return ratio * ratio * s

        first, _ = quad(integrand, 0.0, 1.0, **_QUAD_OPTS)

    second, _ = quad(lambda q: 2.0 * q ** (4.0 * h - 1.0), 0.0, 1.0, **_QUAD_OPTS)
    return first, second


@lru_cache(maxsize=None)
def strassen_kH(hurst: float) -> float:
    """Normalizing constant k_H of the Riemann-Liouville representation."""
    first, second = strassen_kH_components(hurst)
    return math.sqrt(first + second)


def extremal_profile_generator(hurst: HurstParam | float) -> Callable[[np.ndarray], np.ndarray]:
    """The unit-norm g whose image under T_H is the extremal increasing profile.

    g(s) = ((1-s)^{H-1/2} - (-s)^{H-1/2}) / k_H for s <= 0 and
    g(s) = (1-s)^{H-1/2} / k_H on (0, 1]; Int_{-inf}^1 g^2 = 1 by the
    definition of k_H.
    """
    h = _require_hurst(hurst)
    a = h - 0.5
    k_h = strassen_kH(h)

    def g(s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty_like(s_arr)
        neg = s_arr <= 0.0
        sn = s_arr[neg]
        out[neg] = (1.0 - sn) ** a - (-sn) ** a
        sp = s_arr[~neg]
        out[~neg] = (1.0 - sp) ** a
        out /= k_h
        return float(out[0]) if np.ndim(s) == 0 else out

    return g


def _squared_norm(g: Callable, quad_tol: float = 1e-10) -> float:
    opts = dict(epsabs=quad_tol, epsrel=quad_tol, limit=400)
    left, _ = quad(lambda u: float(g(u)) ** 2, -np.inf, 0.0, **opts)
    right, _ = quad(lambda u: float(g(u)) ** 2, 0.0, 1.0, **opts)
    return left + right


def riemann_liouville_TH(g: Callable, t: float, hurst: HurstParam | float,
                         *, check_norm: bool = True) -> float:
    """Evaluate the two-sided Riemann-Liouville operator

        T_H g(t) = (1/k_H) [ Int_0^t (t-u)^{H-1/2} g(u) du
                           + Int_{-inf}^0 ((t-u)^{H-1/2} - (-u)^{H-1/2}) g(u) du ]

    for t in [0, 1].  The (t-u)^{H-1/2} kernel vanishes at u = t but has an
    unbounded derivative; substituting u = t - v^2 makes the first piece
    smooth.  For H = 1/2 the kernel is identically 1 and the two-sided
    correction vanishes.

    With check_norm the ball condition Int_{-inf}^1 g^2 <= 1 is verified
    numerically before evaluation.
    """
    h = _require_hurst(hurst)
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if check_norm:
        norm = _squared_norm(g)
        if norm > 1.0 + 1e-6:
            raise ValueError(f"Int g^2 = {norm:.8f} exceeds the unit ball")
    if t == 0.0:
        return 0.0
    a = h - 0.5
    k_h = strassen_kH(h)

    def recent(v: float) -> float:
        return 2.0 * v ** (2.0 * a + 1.0) * float(g(t - v * v))

    piece1, _ = quad(recent, 0.0, math.sqrt(t), **_QUAD_OPTS)

    if a == 0.0:
        piece2 = 0.0
    else:

        def past(x: float) -> float:
            return ((t + x) ** a - x**a) * float(g(-x))

        piece2, _ = quad(past, 0.0, np.inf, epsabs=1e-11, epsrel=1e-11, limit=400)

    return (piece1 + piece2) / k_h


def profile_f(t: float, hurst: HurstParam | float) -> float:
    """The extremal increasing profile f = T_H g with the unit-norm g above;
    f(0) = 0 and f(1) = 1."""
    h = _require_hurst(hurst)
    return riemann_liouville_TH(extremal_profile_generator(h), t, h, check_norm=False)


def lower_bound_profile(t: float, delta: float, hurst: HurstParam | float) -> float:
    """Truncated profile f_delta(t) = f(min(t, 1 - delta)); approaches f
    pointwise as delta -> 0."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return profile_f(min(t, 1.0 - delta), hurst)
