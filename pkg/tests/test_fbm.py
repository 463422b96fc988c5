import math

import numpy as np
import pytest

from bkproc import fbm
from bkproc.errors import SizeLimitError

H75 = fbm.HurstParam(0.75)
H50 = fbm.HurstParam(0.5)


def test_covariance_values():
    assert fbm.fbm_covariance(2, 2, H75) == pytest.approx(2.0**1.5, abs=1e-12)
    for h in [0.5, 0.6, 0.75, 0.9]:
        assert fbm.fbm_covariance(1, 1, h) == pytest.approx(1.0, abs=1e-12)
    # Wiener reduction: covariance is min(s, t)
    assert fbm.fbm_covariance(1, 3, H50) == pytest.approx(1.0, abs=1e-12)
    assert fbm.fbm_covariance(5, 2, H50) == pytest.approx(2.0, abs=1e-12)


def test_covariance_symmetry_and_diagonal():
    rng = np.random.default_rng(0)
    for _ in range(50):
        s, t = rng.uniform(0, 20, 2)
        h = rng.uniform(0.5, 0.999)
        assert fbm.fbm_covariance(s, t, h) == fbm.fbm_covariance(t, s, h)
        assert fbm.fbm_covariance(t, t, h) == pytest.approx(t ** (2 * h), rel=1e-12)


def test_autocovariance_values():
    for h in [0.5, 0.6, 0.75, 0.9]:
        assert fbm.fgn_autocovariance(0, h) == pytest.approx(1.0, abs=1e-12)
    assert fbm.fgn_autocovariance(1, H75) == pytest.approx(0.5 * (2.0**1.5 - 2.0), abs=1e-9)
    assert fbm.fgn_autocovariance(5, H50) == pytest.approx(0.0, abs=1e-12)


def test_autocovariance_second_difference_oracle():
    # gamma(k) must equal the second difference of t^{2H} computed directly
    h = 0.8
    for k in range(1, 50):
        direct = 0.5 * ((k + 1) ** (2 * h) - 2 * k ** (2 * h) + (k - 1) ** (2 * h))
        assert fbm.fgn_autocovariance(k, h) == pytest.approx(direct, rel=1e-12)


def test_long_range_dependence_partial_sums_increase():
    # sum_{|k|<=m} gamma(k) increases in m for H > 1/2
    for h in [0.6, 0.75, 0.9]:
        gamma = fbm.fgn_autocovariance(np.arange(0, 200), h)
        partial = gamma[0] + 2.0 * np.cumsum(gamma[1:])
        assert np.all(np.diff(partial) > 0)


@pytest.mark.parametrize("n", [2**10, 2**16, 2**20])
def test_circulant_eigenvalues_nonnegative(n):
    for h in [0.55, 0.75, 0.95]:
        lam = fbm.circulant_eigenvalues(n, h)
        assert lam.min() >= -1e-10 * lam.max()


def test_generate_fgn_deterministic():
    spec = fbm.FgnSpec(H75, 512, 20240801)
    a = fbm.generate_fgn(spec)
    b = fbm.generate_fgn(spec)
    assert np.array_equal(a, b)
    c = fbm.generate_fgn(fbm.FgnSpec(H75, 512, 20240802))
    assert not np.array_equal(a, c)


def test_generate_fgn_length_one_is_standard_normal():
    # gamma(0) = 1, so a single increment is N(0, 1); check across seeds
    draws = np.array(
        [fbm.generate_fgn(fbm.FgnSpec(H75, 1, s))[0] for s in range(4000)]
    )
    var = draws.var()
    se = math.sqrt(2.0 / 4000)  # sd of the sample variance of normals
    assert abs(var - 1.0) < 4 * se
    assert abs(draws.mean()) < 4 / math.sqrt(4000)


def test_generate_fgn_wiener_case_uncorrelated():
    n = 2**14
    x = fbm.generate_fgn(fbm.FgnSpec(H50, n, 7))
    lag1 = np.mean(x[1:] * x[:-1])
    assert abs(lag1) < 3.0 / math.sqrt(n)


def test_generate_fgn_lag1_autocovariance():
    # mean of per-replication lag-1 autocovariances vs 0.5 (2^{1.5} - 2)
    reps, n = 16, 2**14
    estimates = []
    for i in range(reps):
        x = fbm.generate_fgn(fbm.FgnSpec(H75, n, 77_000 + i))
        estimates.append(np.mean(x[1:] * x[:-1]))
    estimates = np.array(estimates)
    se = estimates.std(ddof=1) / math.sqrt(reps)
    assert abs(estimates.mean() - 0.41421356) < 3 * se


def test_generate_fgn_cholesky_deterministic_and_guarded():
    spec = fbm.FgnSpec(H75, 64, 99)
    assert np.array_equal(fbm.generate_fgn_cholesky(spec), fbm.generate_fgn_cholesky(spec))
    with pytest.raises(SizeLimitError):
        fbm.generate_fgn_cholesky(fbm.FgnSpec(H75, 4097, 1))


def test_generate_fgn_cholesky_length_one():
    # L = [1], so the draw is exactly the first standard normal of the stream
    seed = 31337
    out = fbm.generate_fgn_cholesky(fbm.FgnSpec(H75, 1, seed))
    expected = np.random.default_rng(seed).standard_normal(1)
    assert out[0] == expected[0]


def test_cholesky_empirical_covariance():
    # small-n version of the generator contract: empirical covariance within
    # 4 standard errors of the autocovariance, entrywise
    n, reps = 16, 4000
    draws = np.empty((reps, n))
    for i in range(reps):
        draws[i] = fbm.generate_fgn_cholesky(fbm.FgnSpec(H75, n, 50_000 + i))
    emp = draws.T @ draws / reps
    second = (draws**2).T @ (draws**2) / reps
    se = np.sqrt(np.maximum(second - emp**2, 1e-12) / reps)
    theo = fbm.fgn_autocovariance(np.abs(np.subtract.outer(np.arange(n), np.arange(n))), H75)
    assert np.all(np.abs(emp - theo) <= 4 * se)


def test_fgn_to_fbm_trivial_and_oracle():
    path = fbm.fgn_to_fbm(np.array([]), H75)
    assert np.array_equal(path.values, [0.0])
    path = fbm.fgn_to_fbm(np.array([1.0, -1.0]), H75)
    assert np.array_equal(path.values, [0.0, 1.0, 0.0])
    rng = np.random.default_rng(5)
    inc = rng.standard_normal(200)
    path = fbm.fgn_to_fbm(inc, H75)
    acc = 0.0
    for i, v in enumerate(inc, start=1):
        acc += v
        assert path.values[i] == pytest.approx(acc, rel=1e-12, abs=1e-12)


def test_fbm_at_real_time_conventions():
    path = fbm.FbmPath(values=np.array([0.0, 1.0, 0.0]), hurst=H75)
    assert fbm.fbm_at_real_time(path, 0.5) == pytest.approx(0.5)
    assert fbm.fbm_at_real_time(path, -3.0) == 0.0
    for n in [0, 1, 2]:
        assert fbm.fbm_at_real_time(path, n) == path.values[n]
    value, flagged = fbm.fbm_at_real_time_flagged(path, 5.0)
    assert value == path.values[-1] and flagged
    value, flagged = fbm.fbm_at_real_time_flagged(path, 2.0)
    assert value == path.values[-1] and not flagged
    value, flagged = fbm.fbm_at_real_time_flagged(path, -1.0)
    assert value == 0.0 and not flagged


def test_hurst_param_validation():
    with pytest.raises(ValueError):
        fbm.HurstParam(0.49)
    with pytest.raises(ValueError):
        fbm.HurstParam(1.0)
    fbm.HurstParam(0.5)
    with pytest.raises(ValueError):
        fbm.FgnSpec(H75, 0, 1)
