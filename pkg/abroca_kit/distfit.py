#!/usr/bin/env python3
# Copyright (c) 2026 abroca_power_kit contributors
"""
帰無分布から得た ABROCA のサンプルに理論分布を当てはめる。

- 最尤推定 (weibull, normal, student_t, fisher_f)
- Kolmogorov-Smirnov 検定 (漸近分布による p 値。推定したパラメータの補正はしない)
- Q-Q プロット用の点と歪度
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy import optimize, stats

from abroca_kit.errors import (
    AbrocaKitError,
    ConfigError,
    NonConvergence,
    NonPositiveSample,
    TooFewSamples,
    ZeroVariance,
)
from abroca_kit.generator import SimConfig, simulate_dataset
from abroca_kit.parallel import make_rng, ordered_map
from abroca_kit.roc import group_abroca

FAMILIES = ('weibull', 'normal', 'student_t', 'fisher_f')
PARAM_NAMES = {
    'weibull': ('shape', 'scale'),
    'normal': ('mean', 'sd'),
    'student_t': ('location', 'scale', 'df'),
    'fisher_f': ('d1', 'd2', 'scale'),
}
POSITIVE_FAMILIES = ('weibull', 'fisher_f')

MIN_FIT_SAMPLES = 50
MIN_KS_SAMPLES = 8
N_RESTARTS = 5
GRADIENT_TOL = 1e-6
KS_SERIES_EPS = 1e-10


def frozen_distribution(family: str, params: Sequence[float]):
    """scipy.stats の凍結分布を返す。"""
    if family == 'weibull':
        shape, scale = params
        return stats.weibull_min(shape, scale=scale)
    if family == 'normal':
        mean, sd = params
        return stats.norm(loc=mean, scale=sd)
    if family == 'student_t':
        location, scale, df = params
        return stats.t(df, loc=location, scale=scale)
    if family == 'fisher_f':
        d1, d2, scale = params
        return stats.f(d1, d2, scale=scale)
    raise ConfigError(f'Unknown family: {family!r}. Choose from {FAMILIES}')


@dataclass(frozen=True)
class DistFit:
    family: str
    params: tuple[float, ...]
    log_likelihood: float
    ks_statistic: float
    ks_p_value: float

    def cdf(self, x):
        return frozen_distribution(self.family, self.params).cdf(x)

    def ppf(self, q):
        return frozen_distribution(self.family, self.params).ppf(q)

    def to_dict(self) -> dict:
        return {
            'family': self.family,
            'params': dict(zip(PARAM_NAMES[self.family], self.params, strict=True)),
            'log_likelihood': self.log_likelihood,
            'ks_statistic': self.ks_statistic,
            'ks_p_value': self.ks_p_value,
        }


# Kolmogorov-Smirnov ---------------------------------------------------------
def kolmogorov_sf(lam: float) -> float:
    """
    Kolmogorov 分布の生存関数 P(K > lam)。
    lam が大きいときは交代級数、小さいときはテータ関数側の級数を使う。
    """
    if lam <= 0:
        return 1.0
    if lam >= 1.18:
        total = 0.0
        k = 1
        while True:
            term = math.exp(-2 * k * k * lam * lam)
            if term < KS_SERIES_EPS:
                break
            total += term if k % 2 == 1 else -term
            k += 1
        p = 2 * total
    else:
        total = 0.0
        k = 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8 * lam * lam))
            if term < KS_SERIES_EPS:
                break
            total += term
            k += 1
        p = 1 - math.sqrt(2 * math.pi) / lam * total
    return min(1.0, max(0.0, p))


def ks_statistic(samples, cdf: Callable) -> float:
    """標本点の両側での ECDF と CDF の差の最大値"""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = len(x)
    c = np.asarray(cdf(x), dtype=np.float64)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - c)
    d_minus = np.max(c - (i - 1) / n)
    return float(min(1.0, max(0.0, d_plus, d_minus)))


def ks_test(samples, cdf: Callable) -> tuple[float, float]:
    """(D, p) を返す。"""
    n = len(samples)
    if n < MIN_KS_SAMPLES:
        raise TooFewSamples(n, MIN_KS_SAMPLES)
    d = ks_statistic(samples, cdf)
    return d, kolmogorov_sf(math.sqrt(n) * d)


# 診断用 ---------------------------------------------------------------------
def qq_points(samples, ppf: Callable) -> list[tuple[float, float]]:
    """順序統計量とプロット位置 (i - 0.5) / n の理論分位点の組"""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = len(x)
    if n < 2:
        raise TooFewSamples(n, 2)
    positions = (np.arange(1, n + 1) - 0.5) / n
    theoretical = np.asarray(ppf(positions), dtype=np.float64)
    return [(float(t), float(s)) for t, s in zip(theoretical, x, strict=True)]


def sample_skewness(samples) -> float:
    """調整済み Fisher-Pearson 歪度 g1·√(n(n-1))/(n-2)"""
    x = np.asarray(samples, dtype=np.float64)
    if len(x) < 3:
        raise TooFewSamples(len(x), 3)
    if np.all(x == x[0]):
        raise ZeroVariance
    return float(stats.skew(x, bias=False))


# 最尤推定 -------------------------------------------------------------------
def mean_log_likelihood(family: str, params: Sequence[float], samples: np.ndarray) -> float:
    return float(np.mean(frozen_distribution(family, params).logpdf(samples)))


def numeric_gradient(func: Callable, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """中心差分による勾配"""
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(len(x)):
        step = np.zeros_like(x)
        step[i] = h * max(1.0, abs(x[i]))
        grad[i] = (func(x + step) - func(x - step)) / (2 * step[i])
    return grad


def _weibull_profile(k: float, ln_y: np.ndarray) -> tuple[float, float]:
    """形状パラメータの尤度方程式 f(k) とその微分"""
    y_k = np.exp(k * ln_y)
    s0 = np.sum(y_k)
    s1 = np.sum(y_k * ln_y) / s0
    s2 = np.sum(y_k * ln_y * ln_y) / s0
    f = s1 - np.mean(ln_y) - 1 / k
    f_prime = s2 - s1 * s1 + 1 / (k * k)
    return float(f), float(f_prime)


def _fit_weibull(x: np.ndarray, iters: int = 100, eps: float = 1e-12) -> tuple[float, float]:
    """
    形状 k を Newton 法で求めてから尺度を閉じた式で出す。
    x は最大値で割っておく (k の方程式は尺度によらない)。
    """
    x_max = float(x.max())
    ln_y = np.log(x / x_max)
    if np.all(ln_y == ln_y[0]):
        raise ZeroVariance
    k = 1.0
    converged = False
    for _ in range(iters):
        f, f_prime = _weibull_profile(k, ln_y)
        k_new = k - f / f_prime
        if not np.isfinite(k_new):
            break
        if k_new <= 0:
            k_new = k / 2
        if abs(k_new - k) < eps * k:
            k = k_new
            converged = True
            break
        k = k_new

    if not converged:
        logging.debug('Newton iteration for weibull shape did not converge; using brentq')
        k = _weibull_shape_brentq(ln_y)
    scale = x_max * float(np.mean(np.exp(k * ln_y))) ** (1 / k)
    return k, scale


def _weibull_shape_brentq(ln_y: np.ndarray) -> float:
    def profile(k):
        return _weibull_profile(k, ln_y)[0]

    low, high = 1.0, 1.0
    for _ in range(60):
        if profile(low) < 0:
            break
        low /= 2
    for _ in range(60):
        if profile(high) > 0:
            break
        high *= 2
    if not profile(low) < 0 < profile(high):
        raise NonConvergence('weibull', 'could not bracket the shape parameter')
    return float(optimize.brentq(profile, low, high, xtol=1e-14, rtol=1e-14))


def _fit_normal(x: np.ndarray) -> tuple[float, float]:
    sd = float(np.std(x))
    if sd == 0:
        raise ZeroVariance
    return float(np.mean(x)), sd


# t と F は対数をとったパラメータ空間で最適化する
def _t_from_theta(theta) -> tuple[float, float, float]:
    return float(theta[0]), float(np.exp(theta[1])), float(np.exp(theta[2]))


def _t_start(x: np.ndarray) -> np.ndarray:
    return np.array([np.median(x), np.log(np.std(x)), np.log(10.0)])


def _f_from_theta(theta) -> tuple[float, float, float]:
    return tuple(float(v) for v in np.exp(theta))


def _f_start(x: np.ndarray) -> np.ndarray:
    # F(d1, d2) の平均は d2 / (d2 - 2)
    d1, d2 = 10.0, 20.0
    scale = float(np.mean(x)) * (d2 - 2) / d2
    return np.log([d1, d2, scale])


_OPTIMIZED = {
    'student_t': (_t_from_theta, _t_start),
    'fisher_f': (_f_from_theta, _f_start),
}


def _negative_mean_ll(theta, family: str, x: np.ndarray, from_theta: Callable) -> float:
    value = mean_log_likelihood(family, from_theta(theta), x)
    if not np.isfinite(value):
        return 1e300
    return -value


def _fit_optimized(x: np.ndarray, family: str, seed: int) -> tuple[float, ...]:
    """
    Nelder-Mead を初期値を変えて N_RESTARTS 回実行し、最良の点を BFGS で詰める。
    """
    from_theta, start = _OPTIMIZED[family]
    objective = partial(_negative_mean_ll, family=family, x=x, from_theta=from_theta)
    theta0 = start(x)
    if not np.all(np.isfinite(theta0)):
        raise ZeroVariance

    best = None
    for restart in range(N_RESTARTS):
        init = theta0
        if restart > 0:
            init = theta0 + make_rng(seed, restart).normal(scale=0.5, size=len(theta0))
        res = optimize.minimize(
            objective,
            init,
            method='Nelder-Mead',
            options={'xatol': 1e-10, 'fatol': 1e-14, 'maxiter': 20_000, 'maxfev': 40_000},
        )
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise NonConvergence(family, 'no restart produced a finite likelihood')

    polished = optimize.minimize(
        objective, best.x, method='BFGS', jac='3-point', options={'gtol': 1e-8}
    )
    theta = polished.x if polished.fun <= best.fun else best.x
    grad = numeric_gradient(objective, theta)
    if not np.all(np.abs(grad) < GRADIENT_TOL):
        raise NonConvergence(family, f'gradient {grad.tolist()} after {N_RESTARTS} restarts')
    return from_theta(theta)


def fit_mle(samples, family: str, seed: int = 0) -> DistFit:
    """最尤推定で分布を当てはめ、K-S 検定の結果と一緒に返す。"""
    if family not in FAMILIES:
        raise ConfigError(f'Unknown family: {family!r}. Choose from {FAMILIES}')
    x = np.asarray(samples, dtype=np.float64)
    if len(x) < MIN_FIT_SAMPLES:
        raise TooFewSamples(len(x), MIN_FIT_SAMPLES)
    if family in POSITIVE_FAMILIES and np.any(x <= 0):
        raise NonPositiveSample(family)

    if family == 'weibull':
        params = _fit_weibull(x)
    elif family == 'normal':
        params = _fit_normal(x)
    else:
        params = _fit_optimized(x, family, seed)

    dist = frozen_distribution(family, params)
    log_likelihood = float(np.sum(dist.logpdf(x)))
    d, p = ks_test(x, dist.cdf)
    return DistFit(
        family=family,
        params=tuple(float(v) for v in params),
        log_likelihood=log_likelihood,
        ks_statistic=d,
        ks_p_value=p,
    )


def fit_all(
    samples, families: Sequence[str] = FAMILIES, seed: int = 0
) -> tuple[dict[str, DistFit], dict[str, AbrocaKitError]]:
    """
    families を順に当てはめる。失敗したものは (ファミリー名 → 例外) に入れて続ける。
    """
    fits = {}
    failures = {}
    for family in families:
        try:
            fits[family] = fit_mle(samples, family, seed)
        except AbrocaKitError as e:
            logging.warning('Fit of %s failed: %s', family, e)
            failures[family] = e
    return fits, failures


# 帰無分布のサンプル ---------------------------------------------------------
def _null_draw(index: int, cfg: SimConfig, seed: int) -> float:
    ds = simulate_dataset(cfg, rng=make_rng(seed, index))
    return group_abroca(ds)


def null_abroca_samples(
    cfg: SimConfig, n_draws: int, seed: int = 0, threads: int = 1, *, progress: bool = True
) -> np.ndarray:
    """
    データセットを n_draws 回生成して ABROCA を1つずつ計算する。
    d 回目は (seed, d) の乱数ストリームを使う。
    """
    if n_draws < 1:
        raise ConfigError(f'n_draws must be >= 1, got {n_draws}')
    func = partial(_null_draw, cfg=cfg, seed=seed)
    values = ordered_map(func, range(n_draws), threads, desc='null ABROCA', progress=progress)
    return np.fromiter(values, dtype=np.float64, count=n_draws)
