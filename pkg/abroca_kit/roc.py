#!/usr/bin/env python3
# Copyright (c) 2026 abroca_power_kit contributors
"""
ROC 曲線・AUC・ABROCA の計算。

ABROCA は2つの区分線形な ROC 曲線の間の面積 ∫|TPR_a - TPR_b| dFPR を
交点を解析的に求めて厳密に積分する。格子点による近似はしない。
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from abroca_kit.dataset import ScoredDataset
from abroca_kit.errors import DomainError, SingleClass


@dataclass(frozen=True)
class RocCurve:
    """
    (FPR, TPR) の折れ線。(0,0) に始まり (1,1) に終わる。
    同じ FPR が続く部分は垂直な線分になる。
    """

    fpr: np.ndarray
    tpr: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return [(float(f), float(t)) for f, t in zip(self.fpr, self.tpr, strict=True)]

    def __len__(self) -> int:
        return len(self.fpr)


def _as_binary(labels) -> np.ndarray:
    labels = np.asarray(labels).astype(bool)
    if labels.all() or not labels.any():
        raise SingleClass
    return labels


def _block_ends(sorted_scores: np.ndarray) -> np.ndarray:
    """降順に並んだスコアで、同点ブロックの最後の位置を返す。"""
    changes = np.flatnonzero(sorted_scores[1:] != sorted_scores[:-1])
    return np.r_[changes, len(sorted_scores) - 1]


def roc_curve(scores, labels) -> RocCurve:
    """
    スコアの異なる値を降順に閾値として ROC 曲線を作る。
    同点のスコアは1つの頂点にまとめる。
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = _as_binary(labels)
    order = np.argsort(-scores, kind='stable')
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    ends = _block_ends(sorted_scores)
    tp = np.cumsum(sorted_labels)[ends]
    fp = np.cumsum(~sorted_labels)[ends]
    fpr = np.r_[0.0, fp / fp[-1]]
    tpr = np.r_[0.0, tp / tp[-1]]
    return RocCurve(fpr=fpr, tpr=tpr)


def auc(scores, labels) -> float:
    """
    Mann-Whitney の U 統計量から AUC を求める。同点は 0.5 として数える。
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = _as_binary(labels)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    # 平均順位の和は半整数なので浮動小数点でも誤差なく計算できる
    rank_sum = rankdata(scores)[labels].sum()
    u_statistic = rank_sum - n_pos * (n_pos + 1) / 2
    return float(u_statistic / (n_pos * n_neg))


def trapezoid_auc(curve: RocCurve) -> float:
    """ROC 曲線の下の面積 (台形則)"""
    return float(np.sum(np.diff(curve.fpr) * (curve.tpr[1:] + curve.tpr[:-1]) / 2))


def _segment_table(fpr: np.ndarray, tpr: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    FPR の異なる値ごとに、そこでの TPR の最小値 (入り口) と最大値 (出口) を返す。
    重複した頂点が含まれていても構わない。
    """
    starts = np.flatnonzero(np.r_[True, fpr[1:] != fpr[:-1]])
    ends = np.r_[starts[1:] - 1, len(fpr) - 1]
    return fpr[starts], tpr[starts], tpr[ends]


def _right_limit(u, lo, hi, x):
    """x のすぐ右側での TPR。x は [0, 1) の範囲。"""
    i = np.clip(np.searchsorted(u, x, side='right') - 1, 0, len(u) - 2)
    return hi[i] + (lo[i + 1] - hi[i]) * (x - u[i]) / (u[i + 1] - u[i])


def _left_limit(u, lo, hi, x):
    """x のすぐ左側での TPR。x は (0, 1] の範囲。"""
    i = np.clip(np.searchsorted(u, x, side='left') - 1, 0, len(u) - 2)
    return hi[i] + (lo[i + 1] - hi[i]) * (x - u[i]) / (u[i + 1] - u[i])


def _abroca_arrays(fpr_a, tpr_a, fpr_b, tpr_b) -> float:
    """
    両曲線の折れ点をまとめた各小区間で差は1次関数になる。
    符号が厳密に変わる区間だけ交点で分けて、|差| を閉じた式で積分する。
    """
    ua, lo_a, hi_a = _segment_table(fpr_a, tpr_a)
    ub, lo_b, hi_b = _segment_table(fpr_b, tpr_b)
    x = np.union1d(ua, ub)
    left, right = x[:-1], x[1:]
    width = right - left
    d0 = _right_limit(ua, lo_a, hi_a, left) - _right_limit(ub, lo_b, hi_b, left)
    d1 = _left_limit(ua, lo_a, hi_a, right) - _left_limit(ub, lo_b, hi_b, right)
    abs0 = np.abs(d0)
    abs1 = np.abs(d1)
    crossing = d0 * d1 < 0
    # 交差する区間は2つの三角形の面積の和
    denominator = np.where(crossing, abs0 + abs1, 1.0)
    area = np.where(
        crossing,
        width * (d0 * d0 + d1 * d1) / (2 * denominator),
        width * (abs0 + abs1) / 2,
    )
    return float(area.sum())


def abroca(curve_a: RocCurve, curve_b: RocCurve) -> float:
    """2つの ROC 曲線の間の面積"""
    return _abroca_arrays(curve_a.fpr, curve_a.tpr, curve_b.fpr, curve_b.tpr)


def interpolate_tpr(curve: RocCurve, fpr):
    """
    折れ線上で FPR に対応する TPR を線形補間で求める。
    垂直な線分上 (同じ FPR の頂点が複数ある) では最大の TPR を返す。
    """
    f = np.asarray(fpr, dtype=np.float64)
    if np.any((f < 0) | (f > 1)) or np.any(np.isnan(f)):
        raise DomainError(f'fpr must lie in [0, 1], got {fpr}')
    u, lo, hi = _segment_table(curve.fpr, curve.tpr)
    i = np.clip(np.searchsorted(u, f, side='right') - 1, 0, len(u) - 2)
    value = hi[i] + (lo[i + 1] - hi[i]) * (f - u[i]) / (u[i + 1] - u[i])
    value = np.where(f == u[i + 1], hi[i + 1], value)
    value = np.where(f == u[i], hi[i], value)
    if value.ndim == 0:
        return float(value)
    return value


def _curve_from_counts(tp: np.ndarray, fp: np.ndarray) -> RocCurve:
    """累積の (TP, FP) から、同じ頂点が続かない ROC 曲線を作る。"""
    tp = np.r_[0, tp]
    fp = np.r_[0, fp]
    keep = np.r_[True, (tp[1:] != tp[:-1]) | (fp[1:] != fp[:-1])]
    return RocCurve(fpr=fp[keep] / fp[-1], tpr=tp[keep] / tp[-1])


@dataclass(frozen=True)
class PresortedScores:
    """
    スコアを一度だけ降順に並べておき、グループの割り当てを変えながら
    2グループの ROC 曲線を O(n) で作り直すためのもの。

    並べ替え検定ではスコアとラベルは固定でグループ列だけが入れ替わる。
    """

    order: np.ndarray
    label: np.ndarray
    block_ends: np.ndarray
    cum_pos: np.ndarray
    cum_all: np.ndarray

    @classmethod
    def from_scores(cls, scores, labels) -> 'PresortedScores':
        scores = np.asarray(scores, dtype=np.float64)
        labels = np.asarray(labels).astype(bool)
        order = np.argsort(-scores, kind='stable')
        sorted_labels = labels[order]
        ends = _block_ends(scores[order])
        return cls(
            order=order,
            label=sorted_labels,
            block_ends=ends,
            cum_pos=np.cumsum(sorted_labels)[ends],
            cum_all=ends + 1,
        )

    @classmethod
    def from_dataset(cls, ds: ScoredDataset) -> 'PresortedScores':
        return cls.from_scores(ds.score, ds.label)

    def group_counts(self, sorted_group: np.ndarray) -> tuple[np.ndarray, ...]:
        """同点ブロックごとの累積 (tp0, fp0, tp1, fp1)"""
        in_group1 = np.asarray(sorted_group).astype(bool)
        all1 = np.cumsum(in_group1)[self.block_ends]
        tp1 = np.cumsum(in_group1 & self.label)[self.block_ends]
        fp1 = all1 - tp1
        tp0 = self.cum_pos - tp1
        fp0 = self.cum_all - self.cum_pos - fp1
        return tp0, fp0, tp1, fp1

    def is_degenerate(self, sorted_group: np.ndarray) -> bool:
        """どちらかのグループが片方のラベルしか持たなければ True"""
        return self._is_degenerate(self.group_counts(sorted_group))

    @staticmethod
    def _is_degenerate(counts: tuple[np.ndarray, ...]) -> bool:
        return min(c[-1] for c in counts) == 0

    def group_curves(self, sorted_group: np.ndarray) -> tuple[RocCurve, RocCurve]:
        """
        グループ0, 1 の ROC 曲線。他グループだけの同点ブロックで生じる
        重複した頂点は取り除くので、各グループで roc_curve と同じ頂点になる。
        """
        counts = self.group_counts(sorted_group)
        if self._is_degenerate(counts):
            raise SingleClass
        tp0, fp0, tp1, fp1 = counts
        return _curve_from_counts(tp0, fp0), _curve_from_counts(tp1, fp1)

    def abroca(self, sorted_group: np.ndarray) -> float:
        curve_0, curve_1 = self.group_curves(sorted_group)
        return abroca(curve_0, curve_1)


def group_abroca(ds: ScoredDataset) -> float:
    """データセット自身のグループ分けでの ABROCA"""
    presorted = PresortedScores.from_dataset(ds)
    return presorted.abroca(ds.group[presorted.order])
