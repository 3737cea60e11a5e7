import numpy as np
import pytest

from src.imaging.raster import BinaryMask, DimensionMismatch
from src.metrics.report import (
    MetricReport, evaluate_dataset, report_from_samples, sample_metrics,
)


def _square(size=8, top=2, side=4):
    bits = np.zeros((size, size), dtype=bool)
    bits[top:top + side, top:top + side] = True
    return BinaryMask(bits)


def test_perfect_predictions_report_all_ones():
    gts = [_square(), _square(10, 3, 5)]
    report = evaluate_dataset(gts, gts)
    assert report.s_measure == 1.0
    assert report.e_measure == 1.0
    assert report.f_max == 1.0
    assert report.f_weighted == 1.0
    assert report.mae == 0.0
    assert report.iou == 1.0
    assert report.sample_count == 2
    assert report.empty_gt_count == 0


def test_means_are_arithmetic_over_samples():
    gt = _square()
    preds = [gt, BinaryMask.empty(8, 8)]
    report = evaluate_dataset(preds, [gt, gt])
    assert report.iou == pytest.approx(0.5)
    assert report.mae == pytest.approx(16 / 64 / 2)
    assert report.f_max == pytest.approx(0.5)


def test_empty_ground_truth_excluded_from_f_means():
    gt = _square()
    empty = BinaryMask.empty(8, 8)
    report = evaluate_dataset([gt, empty], [gt, empty])
    assert report.empty_gt_count == 1
    assert report.f_max == 1.0
    assert report.f_weighted == 1.0
    assert report.iou == 1.0
    assert report.sample_count == 2


def test_length_and_shape_errors():
    with pytest.raises(ValueError, match='Length mismatch'):
        evaluate_dataset([_square()], [])
    with pytest.raises(ValueError):
        evaluate_dataset([], [])
    with pytest.raises(DimensionMismatch, match='index 1'):
        evaluate_dataset([_square(), _square(8)], [_square(), _square(10)])


def test_worker_pool_gives_identical_report():
    rng = np.random.default_rng(3)
    gts = [BinaryMask(rng.random((12, 12)) < 0.3) for _ in range(6)]
    preds = [BinaryMask(rng.random((12, 12)) < 0.3) for _ in range(6)]
    assert evaluate_dataset(preds, gts, workers=2) == evaluate_dataset(preds, gts)


def test_csv_layout():
    report = MetricReport(0.5, 0.25, 1.0, 0.125, 0.0, 1 / 3, 7)
    assert MetricReport.csv_header() == 's,e,f_max,f_w,mae,iou,n'
    assert report.to_csv_row() == '0.500000,0.250000,1.000000,0.125000,0.000000,0.333333,7'


def test_report_validation():
    with pytest.raises(ValueError):
        MetricReport(0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0)
    with pytest.raises(ValueError, match='iou'):
        MetricReport(0.5, 0.5, 0.5, 0.5, 0.5, 1.5, 1)
    with pytest.raises(ValueError):
        report_from_samples([])


def test_sample_metrics_keys():
    row = sample_metrics(_square(), _square())
    assert set(row) == {'s', 'e', 'f_max', 'f_w', 'mae', 'iou', 'empty_gt'}
    assert row['empty_gt'] is False
