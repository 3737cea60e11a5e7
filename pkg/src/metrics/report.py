"""
Dataset-level metric report.

evaluate_dataset scores every (prediction, ground truth) pair with the six
metrics and averages them arithmetically. Samples with an empty ground truth
are left out of the f_max / f_weighted means (precision and recall are
undefined there) and counted in empty_gt_count instead.

CSV layout (one row per report):
    s,e,f_max,f_w,mae,iou,n
with six-decimal fixed formatting for the six metric columns.

Usage:
    from src.metrics.report import evaluate_dataset

    report = evaluate_dataset(pred_masks, gt_masks)
    print(report.to_csv_row())
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Dict, List, Sequence

from src.imaging.raster import BinaryMask, DimensionMismatch, as_bool, iou, mae
from src.metrics.enhanced_alignment import e_measure
from src.metrics.f_measures import f_max, f_weighted
from src.metrics.structure_measure import s_measure
from src.utils.math_stats import compensated_mean

CSV_COLUMNS = ['s', 'e', 'f_max', 'f_w', 'mae', 'iou', 'n']


@dataclass(frozen=True)
class MetricReport:
    s_measure: float
    e_measure: float
    f_max: float
    f_weighted: float
    mae: float
    iou: float
    sample_count: int
    empty_gt_count: int = 0

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError(f"MetricReport needs at least one sample, got {self.sample_count}")
        for name in ('s_measure', 'e_measure', 'f_max', 'f_weighted', 'mae', 'iou'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"MetricReport.{name} = {value} is outside [0, 1]")

    @staticmethod
    def csv_header() -> str:
        return ','.join(CSV_COLUMNS)

    def to_csv_row(self) -> str:
        values = [self.s_measure, self.e_measure, self.f_max,
                  self.f_weighted, self.mae, self.iou]
        return ','.join(f"{v:.6f}" for v in values) + f",{self.sample_count}"

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    def to_row(self) -> Dict[str, float]:
        """Values keyed by CSV column name."""
        return {
            's': self.s_measure,
            'e': self.e_measure,
            'f_max': self.f_max,
            'f_w': self.f_weighted,
            'mae': self.mae,
            'iou': self.iou,
            'n': self.sample_count,
        }


def sample_metrics(pred: BinaryMask, gt: BinaryMask) -> Dict[str, float]:
    """
    All six metrics for one pair, plus the empty-ground-truth flag.

    Returns:
        Dict with keys s, e, f_max, f_w, mae, iou, empty_gt
    """
    fmax_value, empty_gt = f_max(pred, gt, with_flag=True)
    return {
        's': s_measure(pred, gt),
        'e': e_measure(pred, gt),
        'f_max': fmax_value,
        'f_w': f_weighted(pred, gt),
        'mae': mae(pred, gt),
        'iou': iou(pred, gt),
        'empty_gt': empty_gt,
    }


def _sample_metrics_star(pair) -> Dict[str, float]:
    return sample_metrics(*pair)


def report_from_samples(rows: List[Dict[str, float]]) -> MetricReport:
    """Average per-sample metric dicts (as from sample_metrics) into a report."""
    if not rows:
        raise ValueError("Cannot build a MetricReport from zero samples")
    scored = [r for r in rows if not r['empty_gt']]
    return MetricReport(
        s_measure=compensated_mean(r['s'] for r in rows),
        e_measure=compensated_mean(r['e'] for r in rows),
        f_max=compensated_mean(r['f_max'] for r in scored),
        f_weighted=compensated_mean(r['f_w'] for r in scored),
        mae=compensated_mean(r['mae'] for r in rows),
        iou=compensated_mean(r['iou'] for r in rows),
        sample_count=len(rows),
        empty_gt_count=len(rows) - len(scored),
    )


def evaluate_dataset(
    preds: Sequence[BinaryMask],
    gts: Sequence[BinaryMask],
    workers: int = 1
) -> MetricReport:
    """
    Average the six metrics over a dataset of prediction / ground-truth pairs.

    Args:
        preds: Predicted masks
        gts: Ground-truth masks (same length and shapes)
        workers: Process count for per-sample scoring (1 = in-process)

    Returns:
        MetricReport with arithmetic means and sample_count = len(preds)

    Raises:
        ValueError: If the lengths differ or the dataset is empty
        DimensionMismatch: If a pair differs in shape (message names the index)
    """
    if len(preds) != len(gts):
        raise ValueError(f"Length mismatch: {len(preds)} predictions vs {len(gts)} ground truths")
    if not preds:
        raise ValueError("evaluate_dataset needs at least one sample")

    for index, (pred, gt) in enumerate(zip(preds, gts)):
        pred_shape, gt_shape = as_bool(pred).shape, as_bool(gt).shape
        if pred_shape != gt_shape:
            raise DimensionMismatch(pred_shape, gt_shape, f"prediction and ground truth at index {index}")

    pairs = list(zip(preds, gts))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sample_metrics_star, pairs))
    else:
        rows = [sample_metrics(pred, gt) for pred, gt in pairs]
    return report_from_samples(rows)
