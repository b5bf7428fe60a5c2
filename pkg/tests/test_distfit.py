import math

import numpy as np
import pytest
from scipy import special, stats

from abroca_kit.distfit import (
    FAMILIES,
    DistFit,
    fit_all,
    fit_mle,
    frozen_distribution,
    kolmogorov_sf,
    ks_statistic,
    ks_test,
    mean_log_likelihood,
    null_abroca_samples,
    numeric_gradient,
    qq_points,
    sample_skewness,
)
from abroca_kit.errors import (
    ConfigError,
    NonPositiveSample,
    TooFewSamples,
    ZeroVariance,
)
from abroca_kit.generator import SimConfig
from abroca_kit.parallel import make_rng


def _raw_gradient(fit: DistFit, samples) -> np.ndarray:
    def func(params):
        return mean_log_likelihood(fit.family, params, samples)

    return numeric_gradient(func, np.array(fit.params))


def _brute_force_ks(samples, cdf) -> float:
    """各標本点の直前と直後で ECDF を数え直して差をとる"""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = len(x)
    best = 0.0
    for value in x:
        below = np.count_nonzero(x < value) / n
        at_or_below = np.count_nonzero(x <= value) / n
        c = float(cdf(value))
        best = max(best, abs(at_or_below - c), abs(c - below))
    return best


# 最尤推定 -------------------------------------------------------------------
def test_normal_fit_is_closed_form(rng):
    x = rng.normal(3.0, 0.5, size=200)
    fit = fit_mle(x, 'normal')
    assert fit.params == (float(np.mean(x)), float(np.std(x)))
    assert fit.log_likelihood == pytest.approx(float(np.sum(stats.norm.logpdf(x, *fit.params))))


def test_weibull_recovers_parameters(rng):
    x = 0.1 * rng.weibull(1.5, size=5000)
    fit = fit_mle(x, 'weibull')
    shape, scale = fit.params
    assert shape == pytest.approx(1.5, rel=0.05)
    assert scale == pytest.approx(0.1, rel=0.05)
    assert fit.ks_p_value > 0.01


def test_weibull_on_exponential_samples(rng):
    x = rng.exponential(2.0, size=5000)
    shape, scale = fit_mle(x, 'weibull').params
    assert shape == pytest.approx(1.0, abs=0.05)
    assert scale == pytest.approx(2.0, rel=0.05)


def test_weibull_matches_scipy(rng):
    x = 0.05 * rng.weibull(2.0, size=500)
    fit = fit_mle(x, 'weibull')
    shape, _, scale = stats.weibull_min.fit(x, floc=0)
    assert fit.params[0] == pytest.approx(shape, rel=1e-3)
    assert fit.params[1] == pytest.approx(scale, rel=1e-2)


@pytest.mark.parametrize('family', ['weibull', 'normal'])
def test_closed_form_fits_are_stationary(rng, family):
    x = rng.weibull(1.5, size=2000)
    fit = fit_mle(x, family)
    assert np.all(np.abs(_raw_gradient(fit, x)) < 1e-6)


def test_student_t_fit(rng):
    x = 1.0 + 2.0 * rng.standard_t(5, size=2000)
    fit = fit_mle(x, 'student_t', seed=3)
    location, scale, df = fit.params
    assert location == pytest.approx(1.0, abs=0.2)
    assert scale == pytest.approx(2.0, abs=0.3)
    assert 3 < df < 10
    assert np.all(np.abs(_raw_gradient(fit, x)) < 1e-6)


def test_scaled_f_fit(rng):
    x = rng.f(5, 10, size=2000)
    fit = fit_mle(x, 'fisher_f', seed=3)
    assert all(v > 0 for v in fit.params)
    assert fit.ks_p_value > 0.01
    assert np.all(np.abs(_raw_gradient(fit, x)) < 1e-6)


def test_fit_is_deterministic_for_seed(rng):
    x = rng.standard_t(4, size=300)
    assert fit_mle(x, 'student_t', seed=1) == fit_mle(x, 'student_t', seed=1)


def test_fit_errors(rng):
    x = rng.normal(size=100)
    with pytest.raises(NonPositiveSample) as e:
        fit_mle(x, 'weibull')
    assert e.value.family == 'weibull'
    with pytest.raises(NonPositiveSample):
        fit_mle(np.abs(x) - 0.5, 'fisher_f')
    with pytest.raises(TooFewSamples) as e:
        fit_mle(x[:49], 'normal')
    assert (e.value.n, e.value.minimum) == (49, 50)
    with pytest.raises(ZeroVariance):
        fit_mle(np.ones(60), 'normal')
    with pytest.raises(ConfigError):
        fit_mle(x, 'gamma')


def test_fit_all_keeps_going(rng):
    x = rng.normal(size=100)
    fits, failures = fit_all(x, families=('weibull', 'normal'))
    assert list(fits) == ['normal']
    assert isinstance(failures['weibull'], NonPositiveSample)


def test_dist_fit_to_dict(rng):
    fit = fit_mle(rng.normal(size=100), 'normal')
    d = fit.to_dict()
    assert d['family'] == 'normal'
    assert list(d['params']) == ['mean', 'sd']


def test_frozen_distribution_families():
    for family, params in zip(
        FAMILIES, [(1.5, 0.1), (0.0, 1.0), (0.0, 1.0, 5.0), (5.0, 10.0, 0.1)], strict=True
    ):
        dist = frozen_distribution(family, params)
        assert dist.cdf(dist.ppf(0.3)) == pytest.approx(0.3)


# Kolmogorov-Smirnov ---------------------------------------------------------
def test_ks_statistic_matches_brute_force():
    for i in range(200):
        rng = make_rng(555, i)
        n = int(rng.integers(8, 101))
        samples = rng.normal(rng.uniform(-1, 1), rng.uniform(0.5, 2), size=n)
        if i % 4 == 0:
            samples = np.round(samples, 1)  # 同値を含むケース
        cdf = stats.norm(loc=rng.uniform(-0.5, 0.5), scale=rng.uniform(0.5, 1.5)).cdf
        assert ks_statistic(samples, cdf) == pytest.approx(
            _brute_force_ks(samples, cdf), abs=1e-12
        )


def test_duplicate_sample_moves_ks_statistic_by_at_most_one_step():
    for i in range(100):
        rng = make_rng(556, i)
        n = int(rng.integers(8, 101))
        samples = rng.normal(size=n)
        d = ks_statistic(samples, stats.norm.cdf)
        extended = np.append(samples, samples[rng.integers(n)])
        d_extended = ks_statistic(extended, stats.norm.cdf)
        assert 0.0 <= d_extended <= 1.0
        assert abs(d_extended - d) <= 1 / n + 1e-12


def test_ks_statistic_on_quantiles():
    n = 50
    dist = stats.norm()
    samples = dist.ppf(np.arange(1, n + 1) / (n + 1))
    assert ks_statistic(samples, dist.cdf) <= 1 / (n + 1) + 1e-12


def test_ks_test_rejects_wrong_family(rng):
    samples = rng.uniform(size=500)
    d, p = ks_test(samples, stats.norm.cdf)
    assert d > 0.4
    assert p < 0.001


def test_ks_test_requires_samples():
    with pytest.raises(TooFewSamples):
        ks_test([0.1, 0.2, 0.3], stats.norm.cdf)


def test_kolmogorov_sf_matches_scipy():
    for lam in np.linspace(0.05, 3.0, 60):
        assert kolmogorov_sf(lam) == pytest.approx(special.kolmogorov(lam), abs=1e-8)
    assert kolmogorov_sf(0.0) == 1.0


# 診断用 ---------------------------------------------------------------------
def test_qq_points_positions():
    points = qq_points([3.0, 1.0], lambda q: q)
    assert points == [(0.25, 1.0), (0.75, 3.0)]
    with pytest.raises(TooFewSamples):
        qq_points([1.0], lambda q: q)


def test_qq_points_are_monotone(rng):
    points = qq_points(rng.normal(size=100), stats.norm.ppf)
    theoretical, sample = zip(*points, strict=True)
    assert list(theoretical) == sorted(theoretical)
    assert list(sample) == sorted(sample)


def test_sample_skewness():
    assert sample_skewness([-1.0, 0.0, 1.0]) == pytest.approx(0.0)
    assert sample_skewness([0.0, 0.0, 1.0]) == pytest.approx(math.sqrt(3))
    with pytest.raises(ZeroVariance):
        sample_skewness([2.0, 2.0, 2.0])
    with pytest.raises(TooFewSamples):
        sample_skewness([1.0, 2.0])


# 帰無分布のサンプル ---------------------------------------------------------
def test_null_samples_are_deterministic():
    cfg = SimConfig(n_total=100)
    a = null_abroca_samples(cfg, 8, seed=4, progress=False)
    b = null_abroca_samples(cfg, 8, seed=4, threads=2, progress=False)
    assert a.shape == (8,)
    assert np.array_equal(a, b)
    assert np.all(a > 0)
    c = null_abroca_samples(cfg, 8, seed=5, progress=False)
    assert not np.array_equal(a, c)


def test_null_samples_need_draws():
    with pytest.raises(ConfigError):
        null_abroca_samples(SimConfig(), 0, progress=False)


@pytest.mark.slow
def test_null_abroca_is_right_skewed_and_not_weibull_when_imbalanced():
    balanced = null_abroca_samples(SimConfig(), 5000, seed=0, threads=8, progress=False)
    skewed_cfg = SimConfig(ratio_group=0.9, ratio_pos_case=0.9)
    skewed = null_abroca_samples(skewed_cfg, 5000, seed=0, threads=8, progress=False)
    assert sample_skewness(balanced) > 0
    assert sample_skewness(skewed) > 0
    assert fit_mle(skewed, 'weibull').ks_p_value < 0.05
