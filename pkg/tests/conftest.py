import numpy as np
import pytest

from abroca_kit.dataset import from_arrays, write_csv
from abroca_kit.generator import SimConfig, simulate_dataset
from abroca_kit.parallel import make_rng


@pytest.fixture
def rng():
    return make_rng(20240601)


@pytest.fixture
def small_dataset():
    """各グループ 4 件 (正例 2 件、負例 2 件)"""
    score = [0.9, 0.8, 0.4, 0.3, 0.7, 0.2, 0.6, 0.1]
    label = [1, 1, 0, 0, 1, 0, 0, 1]
    group = [0, 0, 0, 0, 1, 1, 1, 1]
    return from_arrays(score, label, group)


@pytest.fixture
def null_dataset():
    """両グループの AUC が等しい 200 件のデータセット"""
    return simulate_dataset(SimConfig(n_total=200, seed=7))


@pytest.fixture
def scores_csv(tmp_path, null_dataset):
    path = tmp_path / 'scores.csv'
    write_csv(null_dataset, path)
    return path


def pair_count_auc(scores, labels) -> float:
    """O(n^2) で正例と負例の組を数える AUC"""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    pos = scores[labels][:, None]
    neg = scores[~labels][None, :]
    wins = np.count_nonzero(pos > neg)
    ties = np.count_nonzero(pos == neg)
    return float((wins + 0.5 * ties) / (pos.size * neg.size))
