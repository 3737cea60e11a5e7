"""
Structure measure (S-measure) for foreground maps.

S = alpha * S_object + (1 - alpha) * S_region, alpha = 0.5

S_object
--------
Object-aware similarity, computed separately on the ground-truth foreground
(using pred) and background (using 1 - pred):

    O(region) = 2 * mu / (mu^2 + 1 + sigma)

where mu / sigma are the mean / sample standard deviation of the map over the
region. The two scores are combined weighted by the foreground / background
pixel counts.

S_region
--------
Region-aware similarity. The frame is split into four quadrants at the
ground-truth centroid; each quadrant contributes an SSIM-style score weighted
by its pixel count:

    ssim = 4 * mx * my * sxy / ((mx^2 + my^2) * (sx + sy))

Degenerate quadrants: when both maps are constant the score is 1 if they are
equal and 0 otherwise; any other zero-covariance case scores 0.

Degenerate ground truth
-----------------------
- gt all background: S = 1 - mean(pred)
- gt all foreground: S = mean(pred)

Denominators above are bounded away from zero whenever they are evaluated, so
no epsilon is added; identical maps therefore score exactly 1.0.
"""

import math
from typing import Tuple

import numpy as np

from src.imaging.raster import MaskLike, as_bool, as_float_map, check_same_shape

ALPHA = 0.5


def _object_score(values: np.ndarray) -> float:
    """O(region) for the map values inside one region (non-empty)."""
    mu = float(values.mean())
    sigma = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return 2.0 * mu / (mu * mu + 1.0 + sigma)


def s_object(pred: np.ndarray, gt: np.ndarray) -> float:
    n_fg = int(np.count_nonzero(gt))
    n_bg = gt.size - n_fg
    fg_score = _object_score(pred[gt]) if n_fg else 0.0
    bg_score = _object_score(1.0 - pred[~gt]) if n_bg else 0.0
    return (n_fg * fg_score + n_bg * bg_score) / gt.size


def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def centroid(gt: np.ndarray) -> Tuple[int, int]:
    """
    Split point (x, y) at the rounded foreground centroid, shifted by one so
    the top-left quadrant is never empty.
    """
    height, width = gt.shape
    coords = np.argwhere(gt)
    if coords.size == 0:
        return _round_half_up(width / 2), _round_half_up(height / 2)
    y_mean, x_mean = coords.mean(axis=0)
    return _round_half_up(x_mean) + 1, _round_half_up(y_mean) + 1


def ssim(pred: np.ndarray, gt: np.ndarray) -> float:
    n = pred.size
    x = float(pred.mean())
    y = float(gt.mean())
    dof = max(n - 1, 1)
    dx = pred - x
    dy = gt - y
    sigma_x = float((dx * dx).sum()) / dof
    sigma_y = float((dy * dy).sum()) / dof
    sigma_xy = float((dx * dy).sum()) / dof

    alpha = 4.0 * x * y * sigma_xy
    beta = (x * x + y * y) * (sigma_x + sigma_y)
    if alpha != 0.0:
        return alpha / beta
    if sigma_x == 0.0 and sigma_y == 0.0:
        return 1.0 if x == y else 0.0
    return 0.0


def s_region(pred: np.ndarray, gt: np.ndarray) -> float:
    x, y = centroid(gt)
    gt_f = gt.astype(np.float64)
    quadrants = [
        (slice(0, y), slice(0, x)),
        (slice(0, y), slice(x, None)),
        (slice(y, None), slice(0, x)),
        (slice(y, None), slice(x, None)),
    ]
    weighted = 0.0
    for rows, cols in quadrants:
        p = pred[rows, cols]
        if p.size == 0:
            continue
        weighted += p.size * ssim(p, gt_f[rows, cols])
    return weighted / gt.size


def s_measure(pred, gt: MaskLike, alpha: float = ALPHA) -> float:
    """
    Structure measure of a [0, 1] map against a binary ground truth.

    Args:
        pred: BinaryMask or float array in [0, 1]
        gt: Ground-truth mask
        alpha: Object/region balance (default 0.5)

    Returns:
        S in [0, 1]

    Raises:
        DimensionMismatch: If the shapes differ
    """
    pred_map = as_float_map(pred)
    gt_bits = as_bool(gt)
    check_same_shape(pred_map, gt_bits)

    fg_ratio = np.count_nonzero(gt_bits) / gt_bits.size
    if fg_ratio == 0.0:
        score = 1.0 - float(pred_map.mean())
    elif fg_ratio == 1.0:
        score = float(pred_map.mean())
    else:
        score = alpha * s_object(pred_map, gt_bits) + (1.0 - alpha) * s_region(pred_map, gt_bits)
    return float(min(1.0, max(0.0, score)))
