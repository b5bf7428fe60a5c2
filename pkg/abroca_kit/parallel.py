#!/usr/bin/env python3
# Copyright (c) 2026 abroca_power_kit contributors
"""
乱数ストリームと並列実行のヘルパー。

各ワーカーは (seed, キー...) から作った Philox ストリームを使うので、
ワーカー数や実行順に関係なく同じ結果になる。
"""

from collections.abc import Callable, Iterable
from typing import TypeVar

import numpy as np
from tqdm import tqdm
from tqdm.contrib.concurrent import process_map

T = TypeVar('T')
R = TypeVar('R')


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """(seed, keys) に対応するカウンタベースの乱数生成器を返す。"""
    if seed < 0:
        raise ValueError(f'seed must be non-negative, got {seed}')
    seed_seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(seed_seq))


def _chunksize(n_items: int, threads: int) -> int:
    # ワーカーあたり 4 チャンク程度
    return max(1, n_items // (threads * 4))


def ordered_map(
    func: Callable[[T], R],
    items: Iterable[T],
    threads: int = 1,
    *,
    desc: str | None = None,
    total: int | None = None,
    progress: bool = True,
) -> list[R]:
    """
    func を items に適用し、入力と同じ順番で結果のリストを返す。

    threads == 1 のときはプロセスを立てずにその場で実行する。
    func は pickle できるモジュールレベル関数 (または partial) であること。
    """
    if threads < 1:
        raise ValueError(f'threads must be >= 1, got {threads}')
    items = list(items)
    if total is None:
        total = len(items)
    disable = not progress
    if threads == 1:
        return [
            func(item)
            for item in tqdm(items, desc=desc, total=total, colour='blue', disable=disable)
        ]
    return process_map(
        func,
        items,
        max_workers=threads,
        chunksize=_chunksize(total, threads),
        desc=desc,
        total=total,
        colour='blue',
        disable=disable,
    )
