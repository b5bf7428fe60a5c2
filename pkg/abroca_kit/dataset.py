#!/usr/bin/env python3
# Copyright (c) 2026 abroca_power_kit contributors
"""
スコア付き予測データ (score, label, group) のデータモデル。

- label: 1 が正例
- group: 0 または 1
CSV は `score,label,group` のヘッダ付き UTF-8。
"""

import csv
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from abroca_kit.errors import (
    CsvFormatError,
    EmptyGroup,
    InvalidCode,
    LengthMismatch,
    NonFiniteScore,
    SingleClassGroup,
)

CSV_COLUMNS = ('score', 'label', 'group')


@dataclass(frozen=True)
class ScoredDataset:
    """検証済みのデータセット。validate() か from_arrays() で作ること。"""

    score: np.ndarray
    label: np.ndarray
    group: np.ndarray

    def __len__(self) -> int:
        return len(self.score)

    def cell_counts(self) -> np.ndarray:
        """group × label の 2x2 の度数表を返す。"""
        table = np.zeros((2, 2), dtype=np.int64)
        np.add.at(table, (self.group, self.label), 1)
        return table

    def rows(self) -> list[tuple[float, int, int]]:
        return [
            (float(s), int(y), int(g))
            for s, y, g in zip(self.score, self.label, self.group, strict=True)
        ]


@dataclass(frozen=True)
class CsvMetadata:
    """CSV のカテゴリ値と {0,1} の対応表"""

    label_mapping: dict[str, int] = field(default_factory=dict)
    group_mapping: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {'label_mapping': self.label_mapping, 'group_mapping': self.group_mapping}


def _readonly(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


def from_arrays(score, label, group) -> ScoredDataset:
    """
    3つの列からデータセットを作って検証する。

    label と group は 0/1 の整数であること。
    """
    score = np.asarray(score, dtype=np.float64)
    label_raw = np.asarray(label)
    group_raw = np.asarray(group)
    lengths = (len(score), len(label_raw), len(group_raw))
    if len(set(lengths)) != 1:
        raise LengthMismatch(lengths)

    not_finite = np.flatnonzero(~np.isfinite(score))
    if len(not_finite) > 0:
        raise NonFiniteScore(int(not_finite[0]))
    for name, column in (('label', label_raw), ('group', group_raw)):
        bad = np.flatnonzero((column != 0) & (column != 1))
        if len(bad) > 0:
            raise InvalidCode(int(bad[0]), name)

    label_arr = label_raw.astype(np.int8)
    group_arr = group_raw.astype(np.int8)
    # 各グループに両方のラベルが必要
    for g in (0, 1):
        in_group = group_arr == g
        if not in_group.any():
            raise EmptyGroup(g)
        n_pos = int(label_arr[in_group].sum())
        if n_pos in (0, int(in_group.sum())):
            raise SingleClassGroup(g)
    # ここまで通れば 4 行以上あることは保証される
    return ScoredDataset(_readonly(score.copy()), _readonly(label_arr), _readonly(group_arr))


def validate(rows: Iterable[Sequence]) -> ScoredDataset:
    """
    (score, label, group) の並びを検証して ScoredDataset にする。
    """
    rows = list(rows)
    for row in rows:
        if len(row) != len(CSV_COLUMNS):
            raise LengthMismatch((len(row), len(CSV_COLUMNS)))
    if not rows:
        raise EmptyGroup(0)
    scores, labels, groups = zip(*rows, strict=True)
    return from_arrays(scores, labels, groups)


def split_by_group(ds: ScoredDataset) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """グループ0とグループ1の (scores, labels) を返す。"""
    parts = []
    for g in (0, 1):
        mask = ds.group == g
        parts.append((ds.score[mask], ds.label[mask]))
    return tuple(parts)


def merge_groups(parts: Sequence[tuple[np.ndarray, np.ndarray]]) -> ScoredDataset:
    """split_by_group の逆。グループ0, 1 の順に連結する。"""
    scores = np.concatenate([p[0] for p in parts])
    labels = np.concatenate([p[1] for p in parts])
    groups = np.concatenate([np.full(len(p[0]), g, dtype=np.int8) for g, p in enumerate(parts)])
    return from_arrays(scores, labels, groups)


def _encode_categories(
    values: list[str], lines: list[int], column: str
) -> tuple[list[int], dict[str, int]]:
    """
    カテゴリ文字列を {0,1} に変換する。
    値が '0' と '1' だけならそのまま使い、そうでなければ出現順に 0, 1 を割り当てる。
    """
    distinct = list(dict.fromkeys(values))
    if set(distinct) <= {'0', '1'}:
        mapping = {'0': 0, '1': 1}
    else:
        if len(distinct) > 2:
            raise CsvFormatError(
                lines[values.index(distinct[2])],
                f'column "{column}" has more than two categories: {distinct[:3]}',
            )
        mapping = {name: i for i, name in enumerate(distinct)}
    mapping = {k: v for k, v in mapping.items() if k in distinct}
    return [mapping[v] for v in values], mapping


def read_csv(path: Path | str) -> tuple[ScoredDataset, CsvMetadata]:
    """
    `score,label,group` 形式の CSV を読み取る。
    パースエラーは行番号 (ヘッダが1行目) つきで報告する。
    """
    path = Path(path)
    scores: list[float] = []
    labels: list[str] = []
    groups: list[str] = []
    lines: list[int] = []
    with open(path, encoding='utf-8', newline='') as fc:
        reader = csv.reader(fc)
        header = next(reader, None)
        if header is None:
            raise CsvFormatError(1, 'file is empty')
        header = [name.strip() for name in header]
        missing = [name for name in CSV_COLUMNS if name not in header]
        if missing:
            raise CsvFormatError(1, f'missing column(s): {", ".join(missing)}')
        idx = [header.index(name) for name in CSV_COLUMNS]
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise CsvFormatError(line, f'expected {len(header)} fields, got {len(row)}')
            raw_score, raw_label, raw_group = (row[i].strip() for i in idx)
            try:
                score = float(raw_score)
            except ValueError:
                raise CsvFormatError(line, f'score "{raw_score}" is not a number') from None
            if not np.isfinite(score):
                raise CsvFormatError(line, f'score "{raw_score}" is not finite')
            if not raw_label or not raw_group:
                raise CsvFormatError(line, 'label and group must not be empty')
            scores.append(score)
            labels.append(raw_label)
            groups.append(raw_group)
            lines.append(line)

    label_codes, label_mapping = _encode_categories(labels, lines, 'label')
    group_codes, group_mapping = _encode_categories(groups, lines, 'group')
    ds = from_arrays(scores, label_codes, group_codes)
    return ds, CsvMetadata(label_mapping=label_mapping, group_mapping=group_mapping)


def write_csv(ds: ScoredDataset, path: Path | str) -> None:
    """スコアは repr で書き出す (読み戻すとビット単位で一致する)。"""
    with open(path, mode='w', encoding='utf-8', newline='\n') as fc:
        writer = csv.writer(fc, lineterminator='\n')
        writer.writerow(CSV_COLUMNS)
        for score, label, group in ds.rows():
            writer.writerow((repr(score), label, group))
