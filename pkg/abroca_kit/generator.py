#!/usr/bin/env python3
# Copyright (c) 2026 abroca_power_kit contributors
"""
母集団 AUC を指定した2グループの合成データを作る。

等分散2正規モデル: 負例 ~ N(0, 1)、正例 ~ N(mu, 1)。
このとき母集団 AUC = Φ(mu / √2)。
"""

import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.special import ndtr, ndtri

from abroca_kit.dataset import ScoredDataset, from_arrays
from abroca_kit.errors import ConfigError, DomainError, InfeasibleConfig
from abroca_kit.parallel import make_rng

DEFAULT_N_TOTAL_CAP = 1_000_000


@dataclass(frozen=True)
class SimConfig:
    """
    データ生成の設定

    auc_1          : グループ0の母集団 AUC
    auc_2          : グループ1の母集団 AUC
    n_total        : テストセット全体の件数
    ratio_group    : グループ0の割合
    ratio_pos_case : 各グループ内の正例の割合
    ratio_pos_case_2: グループ1だけ別の正例割合にするとき指定する
    """

    auc_1: float = 0.75
    auc_2: float = 0.75
    n_total: int = 1000
    ratio_group: float = 0.5
    ratio_pos_case: float = 0.5
    seed: int = 0
    ratio_pos_case_2: float | None = None
    n_total_cap: int = DEFAULT_N_TOTAL_CAP

    def __post_init__(self):
        for name in ('auc_1', 'auc_2', 'ratio_group', 'ratio_pos_case'):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise DomainError(f'{name} must be in (0, 1), got {value}')
        if self.ratio_pos_case_2 is not None and not 0 < self.ratio_pos_case_2 < 1:
            raise DomainError(f'ratio_pos_case_2 must be in (0, 1), got {self.ratio_pos_case_2}')
        if not 4 <= self.n_total <= self.n_total_cap:
            raise InfeasibleConfig(
                f'n_total must be between 4 and {self.n_total_cap}, got {self.n_total}'
            )
        if self.seed < 0:
            raise ConfigError(f'seed must be non-negative, got {self.seed}')

    @property
    def group_1_pos_ratio(self) -> float:
        if self.ratio_pos_case_2 is None:
            return self.ratio_pos_case
        return self.ratio_pos_case_2

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> 'SimConfig':
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f'Unknown SimConfig field(s): {sorted(unknown)}')
        return cls(**d)


@dataclass(frozen=True)
class CellCounts:
    """
    group × label の件数。丸めやクランプが起きたときは notes に記録する。
    """

    n_neg_0: int
    n_pos_0: int
    n_neg_1: int
    n_pos_1: int
    notes: list[str] = field(default_factory=list)

    @property
    def group_sizes(self) -> tuple[int, int]:
        return self.n_neg_0 + self.n_pos_0, self.n_neg_1 + self.n_pos_1


def mu_from_auc(auc: float) -> float:
    """μ = √2 Φ⁻¹(auc)"""
    if not 0 < auc < 1:
        raise DomainError(f'auc must be in (0, 1), got {auc}')
    return float(math.sqrt(2) * ndtri(auc))


def auc_from_mu(mu: float) -> float:
    """mu_from_auc の逆関数"""
    return float(ndtr(mu / math.sqrt(2)))


def _clamp(value: int, low: int, high: int) -> int:
    return max(low, min(high, value))


def _positives(group_n: int, ratio: float, group: int, notes: list[str]) -> int:
    # round は偶数丸め
    n_pos = round(ratio * group_n)
    clamped = _clamp(n_pos, 1, group_n - 1)
    if clamped != n_pos:
        notes.append(f'group {group}: positives clamped from {n_pos} to {clamped}')
    return clamped


def cell_counts(cfg: SimConfig) -> CellCounts:
    """
    件数の決め方
    - グループ0 は round(ratio_group * n_total) 件を [2, n_total - 2] に収める。
    - 各グループの正例は round(ratio * group_n) 件を [1, group_n - 1] に収める。
    """
    notes: list[str] = []
    if cfg.n_total < 4:
        raise InfeasibleConfig(f'n_total {cfg.n_total} cannot hold one instance per cell')
    n_group_0 = round(cfg.ratio_group * cfg.n_total)
    clamped = _clamp(n_group_0, 2, cfg.n_total - 2)
    if clamped != n_group_0:
        notes.append(f'group 0 size clamped from {n_group_0} to {clamped}')
        n_group_0 = clamped
    n_group_1 = cfg.n_total - n_group_0
    n_pos_0 = _positives(n_group_0, cfg.ratio_pos_case, 0, notes)
    n_pos_1 = _positives(n_group_1, cfg.group_1_pos_ratio, 1, notes)
    counts = CellCounts(
        n_neg_0=n_group_0 - n_pos_0,
        n_pos_0=n_pos_0,
        n_neg_1=n_group_1 - n_pos_1,
        n_pos_1=n_pos_1,
        notes=notes,
    )
    if min(counts.n_neg_0, counts.n_pos_0, counts.n_neg_1, counts.n_pos_1) < 1:
        raise InfeasibleConfig(f'Cannot place at least one instance in every cell: {counts}')
    return counts


def simulate_group(
    n_neg: int, n_pos: int, mu: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """負例 n_neg 件を N(0,1)、正例 n_pos 件を N(mu,1) から生成する。"""
    if n_neg < 1 or n_pos < 1:
        raise InfeasibleConfig(f'need n_neg >= 1 and n_pos >= 1, got {n_neg}, {n_pos}')
    scores = np.concatenate(
        (rng.standard_normal(n_neg), rng.normal(loc=mu, scale=1.0, size=n_pos))
    )
    labels = np.r_[np.zeros(n_neg, dtype=np.int8), np.ones(n_pos, dtype=np.int8)]
    return scores, labels


def simulate_dataset(cfg: SimConfig, rng: np.random.Generator | None = None) -> ScoredDataset:
    """
    SimConfig に従ってデータセットを作る。
    rng を省略すると cfg.seed のストリームを使う。
    """
    counts = cell_counts(cfg)
    for note in counts.notes:
        logging.debug('%s', note)
    if rng is None:
        rng = make_rng(cfg.seed)
    scores_0, labels_0 = simulate_group(
        counts.n_neg_0, counts.n_pos_0, mu_from_auc(cfg.auc_1), rng
    )
    scores_1, labels_1 = simulate_group(
        counts.n_neg_1, counts.n_pos_1, mu_from_auc(cfg.auc_2), rng
    )
    groups = np.r_[np.zeros(len(scores_0), dtype=np.int8), np.ones(len(scores_1), dtype=np.int8)]
    return from_arrays(np.r_[scores_0, scores_1], np.r_[labels_0, labels_1], groups)
