import numpy as np
import pytest
from conftest import pair_count_auc

from abroca_kit.dataset import from_arrays, split_by_group
from abroca_kit.errors import DomainError, SingleClass
from abroca_kit.parallel import make_rng
from abroca_kit.roc import (
    PresortedScores,
    RocCurve,
    abroca,
    auc,
    group_abroca,
    interpolate_tpr,
    roc_curve,
    trapezoid_auc,
)


def _random_scored(rng, n_max=200):
    """同点を含むランダムなスコアとラベル"""
    n = int(rng.integers(4, n_max + 1))
    scores = rng.integers(0, max(2, n // 3), size=n).astype(np.float64)
    labels = rng.integers(0, 2, size=n)
    labels[:2] = (0, 1)
    return scores, labels


def _grid_abroca(curve_a, curve_b, n_grid):
    x = np.linspace(0, 1, n_grid)
    diff = np.abs(np.interp(x, curve_a.fpr, curve_a.tpr) - np.interp(x, curve_b.fpr, curve_b.tpr))
    return float(np.sum((diff[1:] + diff[:-1]) / 2 * np.diff(x)))


def test_roc_curve_simple():
    curve = roc_curve([0.9, 0.8, 0.7, 0.6], [1, 1, 0, 0])
    assert curve.fpr.tolist() == [0.0, 0.0, 0.0, 0.5, 1.0]
    assert curve.tpr.tolist() == [0.0, 0.5, 1.0, 1.0, 1.0]
    assert auc([0.9, 0.8, 0.7, 0.6], [1, 1, 0, 0]) == 1.0


def test_ties_collapse_to_one_vertex():
    curve = roc_curve([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0])
    assert curve.points == [(0.0, 0.0), (1.0, 1.0)]
    assert auc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == 0.5


def test_roc_curve_starts_and_ends_at_corners(rng):
    scores, labels = _random_scored(rng)
    curve = roc_curve(scores, labels)
    assert curve.points[0] == (0.0, 0.0)
    assert curve.points[-1] == (1.0, 1.0)
    assert np.all(np.diff(curve.fpr) >= 0)
    assert np.all(np.diff(curve.tpr) >= 0)


def test_single_class_is_rejected():
    with pytest.raises(SingleClass):
        roc_curve([0.1, 0.2], [1, 1])
    with pytest.raises(SingleClass):
        auc([0.1, 0.2], [0, 0])


def test_auc_matches_pair_count_bitwise():
    rng = make_rng(11)
    for _ in range(1000):
        scores, labels = _random_scored(rng)
        assert auc(scores, labels) == pair_count_auc(scores, labels)


def test_auc_matches_trapezoid_area(rng):
    for _ in range(50):
        scores, labels = _random_scored(rng)
        assert trapezoid_auc(roc_curve(scores, labels)) == pytest.approx(
            auc(scores, labels), abs=1e-12
        )


def test_abroca_of_identical_curves_is_zero(rng):
    scores, labels = _random_scored(rng)
    curve = roc_curve(scores, labels)
    assert abroca(curve, curve) == 0.0


def test_abroca_perfect_against_chance():
    perfect = RocCurve(np.array([0.0, 0.0, 1.0]), np.array([0.0, 1.0, 1.0]))
    chance = RocCurve(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    assert abroca(perfect, chance) == pytest.approx(0.5, abs=1e-15)


def test_abroca_with_crossing_curves():
    curve_a = RocCurve(np.array([0.0, 0.5, 1.0]), np.array([0.0, 1.0, 1.0]))
    curve_b = RocCurve(np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.8, 1.0]))
    assert abroca(curve_a, curve_b) == pytest.approx(74 / 360, abs=1e-12)
    assert abroca(curve_b, curve_a) == pytest.approx(74 / 360, abs=1e-12)


def test_abroca_matches_dense_grid():
    rng = make_rng(5)
    for _ in range(50):
        curve_a = roc_curve(*_random_scored(rng, 60))
        curve_b = roc_curve(*_random_scored(rng, 60))
        exact = abroca(curve_a, curve_b)
        assert 0.0 <= exact <= 1.0
        assert exact == pytest.approx(_grid_abroca(curve_a, curve_b, 200_001), abs=1e-4)


@pytest.mark.slow
def test_abroca_matches_million_point_grid():
    rng = make_rng(6)
    for _ in range(500):
        scores_a = rng.standard_normal(100)
        scores_b = rng.standard_normal(100)
        labels = np.r_[np.zeros(50, dtype=int), np.ones(50, dtype=int)]
        curve_a = roc_curve(scores_a + labels, labels)
        curve_b = roc_curve(scores_b + 0.5 * labels, labels)
        assert abroca(curve_a, curve_b) == pytest.approx(
            _grid_abroca(curve_a, curve_b, 1_000_001), abs=1e-6
        )


def test_interpolate_tpr():
    curve = RocCurve(np.array([0.0, 0.0, 0.5, 1.0]), np.array([0.0, 0.4, 0.8, 1.0]))
    assert interpolate_tpr(curve, 0.0) == 0.4
    assert interpolate_tpr(curve, 0.25) == pytest.approx(0.6)
    assert interpolate_tpr(curve, 1.0) == 1.0
    assert interpolate_tpr(curve, [0.5, 0.75]).tolist() == pytest.approx([0.8, 0.9])
    with pytest.raises(DomainError):
        interpolate_tpr(curve, 1.5)


def test_presorted_curves_match_roc_curve(null_dataset):
    presorted = PresortedScores.from_dataset(null_dataset)
    curve_0, curve_1 = presorted.group_curves(null_dataset.group[presorted.order])
    (scores_0, labels_0), (scores_1, labels_1) = split_by_group(null_dataset)
    pairs = ((curve_0, scores_0, labels_0), (curve_1, scores_1, labels_1))
    for curve, scores, labels in pairs:
        expected = roc_curve(scores, labels)
        assert np.array_equal(curve.fpr, expected.fpr)
        assert np.array_equal(curve.tpr, expected.tpr)


def test_group_abroca_matches_per_group_curves(null_dataset):
    (scores_0, labels_0), (scores_1, labels_1) = split_by_group(null_dataset)
    expected = abroca(roc_curve(scores_0, labels_0), roc_curve(scores_1, labels_1))
    assert group_abroca(null_dataset) == pytest.approx(expected, abs=1e-12)


def test_presorted_detects_degenerate_grouping():
    ds = from_arrays([0.9, 0.8, 0.2, 0.1], [1, 0, 1, 0], [0, 0, 1, 1])
    presorted = PresortedScores.from_dataset(ds)
    # グループ1 が負例だけになる割り当て
    group = np.array([0, 1, 0, 1])[presorted.order]
    assert presorted.is_degenerate(group)
    with pytest.raises(SingleClass):
        presorted.abroca(group)


def test_presorted_curves_have_no_repeated_vertices():
    # グループ1 だけの同点ブロック (0.7, 0.6) がグループ0 の頂点を重複させない
    ds = from_arrays(
        [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2],
        [1, 0, 1, 0, 1, 0, 1, 0],
        [0, 0, 1, 1, 1, 1, 0, 0],
    )
    presorted = PresortedScores.from_dataset(ds)
    for curve in presorted.group_curves(ds.group[presorted.order]):
        points = curve.points
        assert all(p != q for p, q in zip(points, points[1:], strict=False))
        assert points[0] == (0.0, 0.0)
        assert points[-1] == (1.0, 1.0)


def test_auc_reflection_and_monotone_transform():
    rng = make_rng(21)
    for _ in range(200):
        scores, labels = _random_scored(rng, 80)
        value = auc(scores, labels)
        assert value + auc(-scores, labels) == pytest.approx(1.0, abs=1e-12)
        assert auc(3 * scores + 1, labels) == value
        assert auc(np.exp(scores / 10), labels) == value


def test_abroca_is_symmetric_and_bounds_auc_gap():
    rng = make_rng(22)
    for _ in range(200):
        scores_a, labels_a = _random_scored(rng, 80)
        scores_b, labels_b = _random_scored(rng, 80)
        curve_a = roc_curve(scores_a, labels_a)
        curve_b = roc_curve(scores_b, labels_b)
        value = abroca(curve_a, curve_b)
        assert abroca(curve_b, curve_a) == pytest.approx(value, abs=1e-12)
        gap = abs(auc(scores_a, labels_a) - auc(scores_b, labels_b))
        assert value >= gap - 1e-12


def test_abroca_invariant_under_shared_transform(null_dataset):
    transformed = from_arrays(np.exp(null_dataset.score), null_dataset.label, null_dataset.group)
    assert group_abroca(transformed) == pytest.approx(group_abroca(null_dataset), abs=1e-12)
