"""Metric conformance against the loop-based oracles."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from src.imaging.raster import BinaryMask, DimensionMismatch, complement
from src.metrics.enhanced_alignment import e_measure
from src.metrics.f_measures import f_beta, f_max, f_weighted, gaussian_kernel
from src.metrics.structure_measure import centroid, s_measure
from tests import oracles
from tests.builders import mask_pairs

METRICS = [s_measure, e_measure, f_max, f_weighted]


def _mixed_gt(size=8, top=2, left=2, side=4):
    gt = np.zeros((size, size), dtype=bool)
    gt[top:top + side, left:left + side] = True
    return gt


@pytest.mark.parametrize('metric', METRICS)
def test_identity_is_exactly_one(metric):
    for gt in (_mixed_gt(), _mixed_gt(16, 3, 5, 8), np.eye(6, dtype=bool)):
        assert metric(gt, gt) == 1.0


def test_identity_on_random_mixed_masks(rng):
    for _ in range(50):
        gt = rng.random((12, 12)) < 0.4
        if not gt.any() or gt.all():
            continue
        assert s_measure(gt, gt) == 1.0
        assert f_max(gt, gt) == 1.0
        assert f_weighted(gt, gt) == 1.0


@pytest.mark.parametrize('metric', METRICS)
def test_dimension_mismatch(metric):
    with pytest.raises(DimensionMismatch):
        metric(np.zeros((2, 3), dtype=bool), np.zeros((3, 2), dtype=bool))


def test_degenerate_ground_truth_conventions():
    empty = np.zeros((4, 4), dtype=bool)
    full = np.ones((4, 4), dtype=bool)
    assert s_measure(empty, empty) == 1.0
    assert e_measure(empty, empty) == 1.0
    assert s_measure(full, full) == 1.0
    half = np.zeros((4, 4))
    half[:2] = 1.0
    assert s_measure(half, empty) == 0.5
    assert s_measure(half, full) == 0.5


def test_empty_ground_truth_f_measures_flagged():
    empty = np.zeros((4, 4), dtype=bool)
    assert f_max(empty, empty, with_flag=True) == (0.0, True)
    assert f_weighted(empty, empty, with_flag=True) == (0.0, True)
    assert f_max(_mixed_gt(), _mixed_gt(), with_flag=True) == (1.0, False)


def test_empty_prediction_scores_zero_f():
    gt = _mixed_gt()
    empty = np.zeros_like(gt)
    assert f_max(empty, gt) == 0.0
    assert f_weighted(empty, gt) == 0.0


def test_s_measure_all_zero_pred_against_centred_square():
    gt = _mixed_gt(16, 4, 4, 8)
    pred = np.zeros((16, 16))
    assert s_measure(pred, gt) == pytest.approx(oracles.s_measure(pred, gt), abs=1e-12)


def test_centroid_rounds_half_up_and_shifts_by_one():
    gt = np.zeros((4, 4), dtype=bool)
    gt[0, 0] = gt[0, 1] = True        # x mean 0.5
    assert centroid(gt) == (2, 1)
    assert centroid(np.zeros((5, 7), dtype=bool)) == (4, 3)


def test_e_measure_of_complement_matches_oracle():
    gt = _mixed_gt()
    pred = ~gt
    assert e_measure(pred, gt) == pytest.approx(oracles.e_measure(pred, gt), abs=1e-12)
    assert e_measure(pred, gt) < 0.5


def test_f_max_binary_block_example():
    gt = np.zeros((5, 5), dtype=bool)
    gt[1:3, 1:3] = True
    pred = np.zeros((5, 5), dtype=bool)
    pred[1:4, 2:5] = True              # overlaps the target in column 2 only
    tp, fp, fn = 2, 7, 2
    expected = f_beta(tp, fp, fn, 0.3)
    assert f_max(pred, gt) == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(1.3 * (2 / 9) * 0.5 / (0.3 * (2 / 9) + 0.5))


def test_f_weighted_near_error_beats_far_error():
    gt = np.zeros((16, 16), dtype=bool)
    gt[4:8, 4:8] = True
    near = gt.copy()
    near[4, 8] = True
    far = gt.copy()
    far[15, 15] = True
    near_score, far_score = f_weighted(near, gt), f_weighted(far, gt)
    assert near_score > far_score
    assert near_score == pytest.approx(oracles.f_weighted(near, gt), abs=1e-9)
    assert far_score == pytest.approx(oracles.f_weighted(far, gt), abs=1e-9)


def test_gaussian_kernel_is_normalised_and_symmetric():
    kernel = gaussian_kernel()
    assert kernel.shape == (7, 7)
    assert kernel.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(kernel, kernel.T)
    np.testing.assert_allclose(kernel, kernel[::-1, ::-1])


def test_metrics_match_oracles_on_random_binary_pairs(rng):
    for _ in range(200):
        h, w = rng.integers(2, 33, size=2)
        pred = rng.random((h, w)) < rng.uniform(0.05, 0.9)
        gt = rng.random((h, w)) < rng.uniform(0.05, 0.9)
        assert s_measure(pred, gt) == pytest.approx(oracles.s_measure(pred, gt), abs=1e-9)
        assert e_measure(pred, gt) == pytest.approx(oracles.e_measure(pred, gt), abs=1e-9)
        assert f_max(pred, gt) == pytest.approx(oracles.f_max(pred, gt), abs=1e-9)
        assert f_weighted(pred, gt) == pytest.approx(oracles.f_weighted(pred, gt), abs=1e-9)


def test_real_valued_maps_match_oracles(rng):
    levels = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    for _ in range(40):
        pred = rng.choice(levels, size=(9, 11))
        gt = rng.random((9, 11)) < 0.4
        assert s_measure(pred, gt) == pytest.approx(oracles.s_measure(pred, gt), abs=1e-9)
        assert f_max(pred, gt) == pytest.approx(oracles.f_max(pred, gt), abs=1e-9)
        assert f_weighted(pred, gt) == pytest.approx(oracles.f_weighted(pred, gt), abs=1e-9)


def test_metrics_match_oracles_up_to_32x32(rng):
    for _ in range(5):
        pred = rng.random((32, 32)) < 0.3
        gt = rng.random((32, 32)) < 0.3
        assert s_measure(pred, gt) == pytest.approx(oracles.s_measure(pred, gt), abs=1e-9)
        assert e_measure(pred, gt) == pytest.approx(oracles.e_measure(pred, gt), abs=1e-9)
        assert f_max(pred, gt) == pytest.approx(oracles.f_max(pred, gt), abs=1e-9)
        assert f_weighted(pred, gt) == pytest.approx(oracles.f_weighted(pred, gt), abs=1e-9)


@given(mask_pairs(max_side=10))
def test_outputs_lie_in_unit_interval(pair):
    pred, gt = pair
    for metric in METRICS:
        assert 0.0 <= metric(pred, gt) <= 1.0


@given(mask_pairs(max_side=10, min_side=2))
def test_transposition_invariance(pair):
    pred, gt = pair
    for metric in METRICS:
        assert metric(pred.T, gt.T) == pytest.approx(metric(pred, gt), abs=1e-12)


@given(mask_pairs(max_side=10), st.data())
def test_breaking_a_correct_pixel_never_raises_f_max(pair, data):
    pred, gt = pair
    correct = np.argwhere(pred == gt)
    if len(correct) == 0 or not gt.any():
        return
    r, c = correct[data.draw(st.integers(0, len(correct) - 1))]
    worse = pred.copy()
    worse[r, c] = not worse[r, c]
    assert f_max(worse, gt) <= f_max(pred, gt)


def test_binary_mask_and_bool_array_agree():
    gt = _mixed_gt()
    pred = np.roll(gt, 1, axis=1)
    for metric in METRICS:
        assert metric(BinaryMask(pred), BinaryMask(gt)) == metric(pred, gt)
    assert e_measure(complement(BinaryMask(gt)), gt) == e_measure(~gt, gt)
