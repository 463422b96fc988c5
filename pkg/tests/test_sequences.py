import math

import numpy as np
import pytest

from bkproc import sequences as seq
from bkproc import theory as th
from bkproc.errors import HermiteRankError, NonpositiveMeanError, SizeLimitError


# ---------------------------------------------------------------------------
# Weights
# ---------------------------------------------------------------------------

def test_weights_values():
    w = seq.weights(seq.WeightSpec(alpha=0.4, truncation=8))
    assert w[0] == 1.0
    assert w[1] == 1.0  # 1^{-anything}
    w6 = seq.weights(seq.WeightSpec(alpha=0.6, truncation=8))
    assert w6[4] == pytest.approx(4.0 ** (-0.8), rel=1e-12)
    assert w6[4] == pytest.approx(0.329877, abs=1e-6)


def test_weight_spec_validation():
    with pytest.raises(ValueError):
        seq.WeightSpec(alpha=0.0, truncation=4)
    with pytest.raises(ValueError):
        seq.WeightSpec(alpha=0.5, truncation=0)


def _sum_psi_sq(alpha: float, k_max: int) -> float:
    total = 1.0
    for start in range(1, k_max + 1, 2**22):
        stop = min(k_max, start + 2**22 - 1)
        k = np.arange(start, stop + 1, dtype=float)
        total += float(np.sum(k ** (-(1.0 + alpha))))
    return total


def test_weight_square_sum_convergence():
    # The truncation tail behaves like the integral K^{-alpha}/alpha: growing
    # K from 1e6 to 1e7 at alpha = 0.4 changes the square sum by ~6.0e-3,
    # matching the analytic estimate (K1^{-a} - K2^{-a})/a to 4 decimals.
    s6 = _sum_psi_sq(0.4, 10**6)
    s7 = _sum_psi_sq(0.4, 10**7)
    analytic = (1e6**-0.4 - 1e7**-0.4) / 0.4
    assert s7 - s6 == pytest.approx(analytic, rel=5e-3)
    # and the reported tail bound dominates the remaining error
    assert s7 - s6 < seq.WeightSpec(alpha=0.4, truncation=10**6).tail_variance()


def test_tail_variance_estimate():
    w = seq.WeightSpec(alpha=0.4, truncation=10**6)
    exact_tail = _sum_psi_sq(0.4, 10**7) - _sum_psi_sq(0.4, 10**6)
    assert w.tail_variance() > exact_tail


def test_sigma_eta_basic_and_oracle():
    assert seq.sigma_eta(np.array([1.0])) == 1.0
    assert seq.sigma_eta(np.array([1.0, 1.0])) == pytest.approx(math.sqrt(2.0), rel=1e-15)
    w = seq.weights(seq.WeightSpec(alpha=0.5, truncation=2**20))
    naive = math.fsum(float(v) * float(v) for v in w)
    assert seq.sigma_eta(w) == pytest.approx(math.sqrt(naive), rel=1e-12)
    with pytest.raises(ValueError):
        seq.sigma_eta(np.array([]))


# ---------------------------------------------------------------------------
# Moving-average generation
# ---------------------------------------------------------------------------

def test_generate_eta_matches_naive_convolution():
    spec = seq.WeightSpec(alpha=0.4, truncation=64)
    n, seed = 10, 7
    eta = seq.generate_eta(spec, n, seed)
    psi = seq.weights(spec)
    noise = np.random.default_rng(seed).standard_normal(n + spec.truncation)
    naive = np.array(
        [
            math.fsum(psi[k] * noise[j - k + spec.truncation] for k in range(spec.truncation + 1))
            for j in range(n)
        ]
    )
    np.testing.assert_allclose(eta, naive, rtol=1e-10, atol=1e-12)


def test_generate_eta_minimal_truncation_structure():
    # K = 1: eta_j = xi_j + xi_{j-1} exactly
    spec = seq.WeightSpec(alpha=0.4, truncation=1)
    eta = seq.generate_eta(spec, 50, 3)
    noise = np.random.default_rng(3).standard_normal(51)
    np.testing.assert_allclose(eta, noise[1:] + noise[:-1], rtol=1e-12, atol=1e-12)


def test_generate_eta_deterministic_and_capped():
    spec = seq.WeightSpec(alpha=0.4, truncation=128)
    assert np.array_equal(seq.generate_eta(spec, 100, 5), seq.generate_eta(spec, 100, 5))
    with pytest.raises(SizeLimitError):
        seq.generate_eta(seq.WeightSpec(alpha=0.4, truncation=seq.ALLOCATION_CAP), 10, 1)


def test_generate_eta_variance():
    # E[eta^2] must match sum psi_k^2 (the process is centered by
    # construction, so no sample-mean correction enters)
    spec = seq.WeightSpec(alpha=0.4, truncation=2**16)
    target = seq.sigma_eta(seq.weights(spec)) ** 2
    reps, n = 48, 2**13
    estimates = np.array(
        [np.mean(seq.generate_eta(spec, n, 33_000 + i) ** 2) for i in range(reps)]
    )
    se = estimates.std(ddof=1) / math.sqrt(reps)
    assert abs(estimates.mean() - target) < 3 * se


def test_covariance_decay_ratio_trend():
    # Exact truncated autocovariance gamma_K(m) = sum_k psi_k psi_{k+m}
    # compared against the asymptote b_alpha m^{-alpha}: the ratio approaches
    # 1 monotonically over dyadic lags 2^5..2^9.
    alpha, big_k = 0.4, 2**22
    psi = np.concatenate(
        [[1.0], np.arange(1, big_k + 1, dtype=float) ** (-0.5 * (1 + alpha))]
    )
    b = th.b_alpha_beta_identity(alpha)
    ratios = []
    for m in [32, 64, 128, 256, 512]:
        gamma_m = float(psi[:-m] @ psi[m:])
        ratios.append(gamma_m * m**alpha / b)
    assert all(b2 > a2 for a2, b2 in zip(ratios, ratios[1:]))
    assert abs(ratios[-1] - 1.0) < abs(ratios[0] - 1.0)
    # and the simulated sequence reproduces the exact truncated covariance
    spec = seq.WeightSpec(alpha=alpha, truncation=2**16)
    psi16 = seq.weights(spec)
    exact32 = float(psi16[:-32] @ psi16[32:])
    reps, n = 48, 2**13
    estimates = np.array(
        [
            np.mean(
                seq.generate_eta(spec, n, 61_000 + i)[32:]
                * seq.generate_eta(spec, n, 61_000 + i)[:-32]
            )
            for i in range(reps)
        ]
    )
    se = estimates.std(ddof=1) / math.sqrt(reps)
    assert abs(estimates.mean() - exact32) < 3 * se


# ---------------------------------------------------------------------------
# Subordination
# ---------------------------------------------------------------------------

def test_subordinate_values():
    out = seq.subordinate(np.array([0.0, 1.0, -1.0]), seq.Shift(1.0))
    np.testing.assert_array_equal(out, [1.0, 2.0, 0.0])
    out = seq.subordinate(np.array([0.0]), seq.ExpG(1.0))
    np.testing.assert_array_equal(out, [1.0])


def test_subordinate_pointwise_oracle():
    rng = np.random.default_rng(17)
    x = rng.standard_normal(100)
    g = seq.Tabulated(lambda v: np.tanh(v) + 2.0)
    out = seq.subordinate(x, g)
    for i in range(100):
        assert out[i] == pytest.approx(math.tanh(x[i]) + 2.0, rel=1e-15)


def test_subordinate_shift_moves_mean_exactly():
    rng = np.random.default_rng(23)
    x = rng.standard_normal(512)
    shifted = seq.subordinate(x, seq.Shift(2.5))
    assert shifted.mean() - x.mean() == pytest.approx(2.5, abs=1e-12)


def test_j1_mu_closed_forms():
    assert seq.j1_mu_of(seq.Shift(1.0)) == (1.0, 1.0)
    j1, mu = seq.j1_mu_of(seq.ExpG(1.0))
    assert j1 == pytest.approx(math.exp(0.5), rel=1e-12)
    assert mu == pytest.approx(math.exp(0.5), rel=1e-12)


def test_j1_mu_quadrature_matches_closed_forms():
    j1, mu = seq.j1_mu_of(seq.Tabulated(np.exp))
    assert j1 == pytest.approx(1.648721270700, abs=1e-9)
    assert mu == pytest.approx(1.648721270700, abs=1e-9)
    j1s, mus = seq.j1_mu_of(seq.Tabulated(lambda x: 1.0 + x))
    assert j1s == pytest.approx(1.0, abs=1e-9)
    assert mus == pytest.approx(1.0, abs=1e-9)


def test_j1_mu_error_cases():
    with pytest.raises(HermiteRankError):
        seq.j1_mu_of(seq.ExpG(1e-9))  # J_1 -> 0 as lam -> 0
    with pytest.raises(HermiteRankError):
        seq.j1_mu_of(seq.Tabulated(lambda x: x * x))  # even function, rank 2
    with pytest.raises(NonpositiveMeanError):
        seq.j1_mu_of(seq.Tabulated(lambda x: x))  # mean zero
    with pytest.raises(ValueError):
        seq.j1_mu_of(seq.Tabulated(np.exp), nodes=32)


# ---------------------------------------------------------------------------
# Weak-dependence models
# ---------------------------------------------------------------------------

def test_iid_moments():
    m = seq.moments_of(seq.IID(seq.Exponential(1.0)))
    assert (m.mu, m.sigma_longrun) == (1.0, 1.0)
    m = seq.moments_of(seq.IID(seq.Gamma(4.0, 2.0)))
    assert m.mu == 2.0 and m.sigma_marginal == 1.0
    m = seq.moments_of(seq.IID(seq.ShiftedUniform(1.0, 3.0)))
    assert m.mu == 2.0
    assert m.sigma_marginal == pytest.approx(2.0 / math.sqrt(12.0), rel=1e-12)


def test_weak_moment_formulas():
    m = seq.moments_of(seq.MAq(innovation_sd=1.0, coefficients=(1.0, 1.0), shift=2.0))
    assert m.mu == 2.0 and m.sigma_longrun == pytest.approx(2.0)
    m = seq.moments_of(seq.AR1(rho=0.5, innovation_sd=1.0, shift=1.0))
    assert m.sigma_longrun == pytest.approx(2.0)
    assert m.sigma_marginal == pytest.approx(1.0 / math.sqrt(0.75), rel=1e-12)


@pytest.mark.parametrize(
    "model,sigma_lr",
    [
        (seq.MAq(innovation_sd=1.0, coefficients=(1.0, 1.0), shift=2.0), 2.0),
        (seq.AR1(rho=0.5, innovation_sd=1.0, shift=1.0), 2.0),
    ],
)
def test_weak_longrun_variance_monte_carlo(model, sigma_lr):
    # variance of normalized block sums converges to the long-run variance
    mu = seq.moments_of(model).mu
    reps, n = 96, 4096
    sums = np.array(
        [
            (seq.generate_weak(model, n, 9_000 + i).sum() - mu * n) / math.sqrt(n)
            for i in range(reps)
        ]
    )
    var = sums.var(ddof=1)
    se = var * math.sqrt(2.0 / (reps - 1))
    assert abs(var - sigma_lr**2) < 3 * se


def test_weak_mean_monte_carlo():
    model = seq.IID(seq.Exponential(1.0))
    y = seq.generate_weak(model, 100_000, 3)
    assert abs(y.mean() - 1.0) < 3.0 / math.sqrt(100_000)


def test_model_validation():
    with pytest.raises(NonpositiveMeanError):
        seq.MAq(innovation_sd=1.0, coefficients=(1.0,), shift=-1.0)
    with pytest.raises(NonpositiveMeanError):
        seq.AR1(rho=0.2, innovation_sd=1.0, shift=0.0)
    with pytest.raises(ValueError):
        seq.AR1(rho=1.5, innovation_sd=1.0, shift=1.0)
    with pytest.raises(ValueError):
        seq.MAq(innovation_sd=1.0, coefficients=(1.0, -1.0), shift=1.0)
    with pytest.raises(NonpositiveMeanError):
        seq.ShiftedUniform(-3.0, 1.0)
    with pytest.raises(NonpositiveMeanError):
        seq.Shift(0.0)


def test_moments_always_positive():
    models = [
        seq.IID(seq.Exponential(2.0)),
        seq.IID(seq.Gamma(3.0, 1.5)),
        seq.IID(seq.ShiftedUniform(0.5, 2.5)),
        seq.MAq(innovation_sd=0.5, coefficients=(1.0, 0.3, 0.2), shift=1.0),
        seq.AR1(rho=-0.4, innovation_sd=2.0, shift=3.0),
        seq.LRD(weights=seq.WeightSpec(0.4, 256), g=seq.Shift(1.0)),
        seq.LRD(weights=seq.WeightSpec(0.3, 256), g=seq.ExpG(0.5)),
    ]
    for model in models:
        m = seq.moments_of(model)
        assert m.mu > 0 and m.sigma_marginal > 0
        if m.sigma_longrun is not None:
            assert m.sigma_longrun > 0
        if m.c is not None:
            assert m.c != 0


def test_generate_dispatcher_deterministic():
    models = [
        seq.IID(seq.Exponential(1.0)),
        seq.IID(seq.Gamma(2.0, 1.0)),
        seq.IID(seq.ShiftedUniform(0.0, 2.0)),
        seq.MAq(innovation_sd=1.0, coefficients=(1.0, 0.5), shift=1.0),
        seq.AR1(rho=0.3, innovation_sd=1.0, shift=1.0),
        seq.LRD(weights=seq.WeightSpec(0.4, 64), g=seq.Shift(1.0)),
    ]
    for model in models:
        a = seq.generate(model, 64, 11)
        b = seq.generate(model, 64, 11)
        assert np.array_equal(a, b)
        assert len(a) == 64


def test_lrd_generation_is_standardized_then_subordinated():
    spec = seq.WeightSpec(0.4, 64)
    model = seq.LRD(weights=spec, g=seq.Shift(1.0))
    y = seq.generate(model, 32, 5)
    eta = seq.generate_eta(spec, 32, 5)
    sigma = seq.sigma_eta(seq.weights(spec))
    np.testing.assert_allclose(y, 1.0 + eta / sigma, rtol=1e-15)


def test_theory_params_for_lrd():
    model = seq.LRD(weights=seq.WeightSpec(0.4, 2**10), g=seq.Shift(1.0))
    p = seq.theory_params_for(model)
    assert p.alpha == 0.4 and p.j1 == 1.0 and p.mu == 1.0
    assert p.sigma == pytest.approx(seq.sigma_eta(seq.weights(model.weights)))
    assert p.c == pytest.approx(p.kappa_alpha / p.sigma, rel=1e-12)
    with pytest.raises(TypeError):
        seq.theory_params_for(seq.IID(seq.Exponential(1.0)))


def test_model_dict_round_trip():
    models = [
        seq.IID(seq.Exponential(1.5)),
        seq.IID(seq.Gamma(2.0, 3.0)),
        seq.IID(seq.ShiftedUniform(0.5, 2.0)),
        seq.MAq(innovation_sd=1.0, coefficients=(1.0, 0.7, 0.4), shift=2.0),
        seq.AR1(rho=0.5, innovation_sd=1.0, shift=1.0),
        seq.LRD(weights=seq.WeightSpec(0.4, 2**16), g=seq.Shift(1.0)),
        seq.LRD(weights=seq.WeightSpec(0.3, 128), g=seq.ExpG(0.8)),
    ]
    for model in models:
        assert seq.model_from_dict(seq.model_to_dict(model)) == model
    with pytest.raises(ValueError):
        seq.model_from_dict({"kind": "mystery"})
    with pytest.raises(ValueError):
        seq.model_to_dict(seq.LRD(weights=seq.WeightSpec(0.4, 4), g=seq.Tabulated(np.exp)))
