#!/usr/bin/env python3
# Copyright (c) 2026 abroca_power_kit contributors
"""
並べ替え検定の検出力をモンテカルロ法で推定する。

1回の反復 = データ生成 → 並べ替え検定。p < alpha となった割合を検出力とする。
反復 i はデータ生成に (master_seed, i, 0)、j 回目の並べ替えに (master_seed, i, 1, j)
の乱数ストリームを使うので、並列数を変えても結果は変わらない。
"""

import csv
import itertools
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from functools import partial
from pathlib import Path

from abroca_kit.errors import AbrocaKitError, ConfigError, DegenerateNull
from abroca_kit.generator import SimConfig, cell_counts, simulate_dataset
from abroca_kit.parallel import make_rng, ordered_map
from abroca_kit.permutation_test import TestConfig, randomization_test

DEFAULT_BASELINE_AUC = 0.725
DEFAULT_N_ITER_POWER = 500
MIN_REPORTED_ITER_POWER = 100
MAX_DEGENERATE_FRACTION = 0.01

POWER_CSV_COLUMNS = (
    'n_total',
    'auc_diff',
    'ratio_group',
    'ratio_pos_case',
    'power',
    'mc_stderr',
    'n_iter_power',
    'n_iter_test',
    'alpha',
    'baseline_auc',
    'error',
)


@dataclass(frozen=True)
class PowerConfig:
    """sim.seed は使わない。乱数の元は master_seed。"""

    sim: SimConfig
    test: TestConfig
    n_iter_power: int = DEFAULT_N_ITER_POWER
    alpha: float = 0.05
    master_seed: int = 0

    def __post_init__(self):
        if self.n_iter_power < 1:
            raise ConfigError(f'n_iter_power must be >= 1, got {self.n_iter_power}')
        if not 0 < self.alpha < 1:
            raise ConfigError(f'alpha must be in (0, 1), got {self.alpha}')
        if self.master_seed < 0:
            raise ConfigError(f'master_seed must be non-negative, got {self.master_seed}')

    @property
    def under_iterated(self) -> bool:
        return self.n_iter_power < MIN_REPORTED_ITER_POWER

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PowerEstimate:
    power: float
    n_rejections: int
    n_iter_power: int
    mc_stderr: float
    n_degenerate: int
    config_echo: PowerConfig

    def to_dict(self) -> dict:
        d = asdict(self)
        d['under_iterated'] = self.config_echo.under_iterated
        return d


@dataclass(frozen=True)
class PowerRow:
    n_total: int
    auc_diff: float
    ratio_group: float
    ratio_pos_case: float
    power: float | None
    mc_stderr: float | None
    n_iter_power: int
    n_iter_test: int
    alpha: float
    baseline_auc: float
    error: str = ''

    @property
    def condition(self) -> tuple[float, float, float]:
        return (self.auc_diff, self.ratio_group, self.ratio_pos_case)


@dataclass(frozen=True)
class PowerCurve:
    rows: tuple[PowerRow, ...]

    def __post_init__(self):
        keys = [(row.n_total, *row.condition) for row in self.rows]
        if len(set(keys)) != len(keys):
            raise ConfigError('PowerCurve rows must be unique on (n_total, conditions).')

    def conditions(self) -> list[tuple[float, float, float]]:
        return list(dict.fromkeys(row.condition for row in self.rows))

    def series(self, condition: tuple[float, float, float]) -> list[PowerRow]:
        """条件を1つ選んで n_total 順に並べた行"""
        rows = [row for row in self.rows if row.condition == condition]
        return sorted(rows, key=lambda row: row.n_total)


@dataclass(frozen=True)
class SweepGrid:
    n_totals: tuple[int, ...]
    auc_diffs: tuple[float, ...]
    ratio_groups: tuple[float, ...] = (0.5,)
    ratio_pos_cases: tuple[float, ...] = (0.5,)

    def __post_init__(self):
        for name in ('n_totals', 'auc_diffs', 'ratio_groups', 'ratio_pos_cases'):
            values = getattr(self, name)
            if len(values) == 0:
                raise ConfigError(f'Grid axis "{name}" is empty.')
            if len(set(values)) != len(values):
                raise ConfigError(f'Grid axis "{name}" has duplicate values: {values}')

    def cells(self) -> list[tuple[float, float, float, int]]:
        """(auc_diff, ratio_group, ratio_pos_case, n_total) の直積。条件ごとにまとまる順番。"""
        axes = (self.auc_diffs, self.ratio_groups, self.ratio_pos_cases, self.n_totals)
        return list(itertools.product(*axes))

    def to_dict(self) -> dict:
        return {k: list(v) for k, v in asdict(self).items()}


def default_n_totals() -> tuple[int, ...]:
    return tuple(range(100, 2001, 100))


def sample_size_grid() -> SweepGrid:
    """サンプルサイズ × 効果量 (グループ・ラベルとも均衡)"""
    return SweepGrid(n_totals=default_n_totals(), auc_diffs=(0.02, 0.05, 0.1, 0.15, 0.2))


def imbalance_grid() -> SweepGrid:
    """効果量 0.1 固定で、グループと正例の割合を 50% / 90% で変える"""
    return SweepGrid(
        n_totals=default_n_totals(),
        auc_diffs=(0.1,),
        ratio_groups=(0.5, 0.9),
        ratio_pos_cases=(0.5, 0.9),
    )


def mc_stderr(power: float, n: int) -> float:
    """二項分布の標準誤差 √(p(1-p)/n)"""
    return math.sqrt(power * (1 - power) / n)


def _run_replicate(index: int, cfg: PowerConfig) -> float | None:
    """
    反復1回分の p 値。引き直しの上限に達したときは None を返す。
    """
    ds = simulate_dataset(cfg.sim, rng=make_rng(cfg.master_seed, index, 0))
    test_cfg = replace(cfg.test, seed=cfg.master_seed)
    try:
        result = randomization_test(ds, test_cfg, stream_key=(index, 1))
    except DegenerateNull:
        return None
    return result.p_value


def estimate_power(
    cfg: PowerConfig, threads: int = 1, *, progress: bool = True
) -> PowerEstimate:
    """n_iter_power 回の反復で検出力を推定する。"""
    # 件数の決まらない設定はここで止める
    counts = cell_counts(cfg.sim)
    for note in counts.notes:
        logging.warning('%s', note)
    if cfg.under_iterated:
        logging.warning(
            'n_iter_power = %d is below %d; treat this estimate as a smoke test.',
            cfg.n_iter_power,
            MIN_REPORTED_ITER_POWER,
        )

    func = partial(_run_replicate, cfg=cfg)
    desc = f'power n={cfg.sim.n_total} auc={cfg.sim.auc_1:.3f}/{cfg.sim.auc_2:.3f}'
    p_values = list(
        ordered_map(func, range(cfg.n_iter_power), threads, desc=desc, progress=progress)
    )

    n_degenerate = sum(p is None for p in p_values)
    if n_degenerate > MAX_DEGENERATE_FRACTION * cfg.n_iter_power:
        raise DegenerateNull(
            f'{n_degenerate} of {cfg.n_iter_power} replicates could not build a null '
            'distribution; increase max_resample or the sample size.'
        )
    if n_degenerate > 0:
        logging.warning(
            '%d replicates hit the redraw limit and count as non-rejections', n_degenerate
        )

    # 引き直しに失敗した反復は棄却しなかったものとして数える
    n_rejections = sum(p is not None and p < cfg.alpha for p in p_values)
    power = n_rejections / cfg.n_iter_power
    return PowerEstimate(
        power=power,
        n_rejections=n_rejections,
        n_iter_power=cfg.n_iter_power,
        mc_stderr=mc_stderr(power, cfg.n_iter_power),
        n_degenerate=n_degenerate,
        config_echo=cfg,
    )


def cell_config(
    base: PowerConfig,
    auc_diff: float,
    ratio_group: float,
    ratio_pos_case: float,
    n_total: int,
    baseline_auc: float = DEFAULT_BASELINE_AUC,
) -> PowerConfig:
    """効果量を基準 AUC の上下に半分ずつ振り分けた設定を作る。"""
    sim = replace(
        base.sim,
        auc_1=baseline_auc + auc_diff / 2,
        auc_2=baseline_auc - auc_diff / 2,
        n_total=n_total,
        ratio_group=ratio_group,
        ratio_pos_case=ratio_pos_case,
    )
    return replace(base, sim=sim)


def power_sweep(
    base: PowerConfig,
    grid: SweepGrid,
    baseline_auc: float = DEFAULT_BASELINE_AUC,
    threads: int = 1,
    *,
    progress: bool = True,
) -> PowerCurve:
    """
    グリッドの直積の各セルで検出力を推定する。
    セルが失敗しても行にエラーを記録して続ける。
    全セルで同じ master_seed を使う。
    """
    rows = []
    for auc_diff, ratio_group, ratio_pos_case, n_total in grid.cells():
        common = {
            'n_total': n_total,
            'auc_diff': auc_diff,
            'ratio_group': ratio_group,
            'ratio_pos_case': ratio_pos_case,
            'n_iter_power': base.n_iter_power,
            'n_iter_test': base.test.n_iter_test,
            'alpha': base.alpha,
            'baseline_auc': baseline_auc,
        }
        try:
            cfg = cell_config(base, auc_diff, ratio_group, ratio_pos_case, n_total, baseline_auc)
            estimate = estimate_power(cfg, threads, progress=progress)
        except AbrocaKitError as e:
            logging.warning('Sweep cell %s failed: %s', common, e)
            error = f'{type(e).__name__}: {e}'
            rows.append(PowerRow(**common, power=None, mc_stderr=None, error=error))
            continue
        rows.append(PowerRow(**common, power=estimate.power, mc_stderr=estimate.mc_stderr))
    return PowerCurve(rows=tuple(rows))


def required_n_total(
    curve: PowerCurve, target: float = 0.8
) -> dict[tuple[float, float, float], int | None]:
    """
    条件ごとに、検出力が target に達した最小の n_total を返す。
    一度も達しなければ None。
    """
    result = {}
    for condition in curve.conditions():
        reached = [
            row.n_total
            for row in curve.series(condition)
            if row.power is not None and row.power >= target
        ]
        result[condition] = min(reached) if reached else None
    return result


def _format_cell(value) -> str:
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_power_csv(curve: PowerCurve, path: Path | str) -> None:
    with open(path, mode='w', encoding='utf-8', newline='\n') as fc:
        writer = csv.writer(fc, lineterminator='\n')
        writer.writerow(POWER_CSV_COLUMNS)
        for row in curve.rows:
            writer.writerow([_format_cell(getattr(row, name)) for name in POWER_CSV_COLUMNS])


def read_power_csv(path: Path | str) -> PowerCurve:
    converters = {
        'n_total': int,
        'n_iter_power': int,
        'n_iter_test': int,
        'auc_diff': float,
        'ratio_group': float,
        'ratio_pos_case': float,
        'alpha': float,
        'baseline_auc': float,
    }
    rows = []
    with open(path, encoding='utf-8', newline='') as fc:
        for record in csv.DictReader(fc):
            kwargs = {name: func(record[name]) for name, func in converters.items()}
            for name in ('power', 'mc_stderr'):
                kwargs[name] = float(record[name]) if record[name] else None
            kwargs['error'] = record.get('error') or ''
            rows.append(PowerRow(**kwargs))
    return PowerCurve(rows=tuple(rows))


def curves_to_rows(curve: PowerCurve) -> list[dict]:
    return [asdict(row) for row in curve.rows]


@dataclass(frozen=True)
class SweepSummary:
    """required_n_total の結果を表示用にまとめたもの"""

    target: float
    required: dict = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = []
        for (auc_diff, ratio_group, ratio_pos_case), n_total in self.required.items():
            label = (
                f'auc_diff={auc_diff:g} ratio_group={ratio_group:g} '
                f'ratio_pos_case={ratio_pos_case:g}'
            )
            value = 'not reached' if n_total is None else f'n_total >= {n_total}'
            out.append(f'{label} : {value}')
        return out
