"""
F-measures for foreground maps.

f_max
-----
Maximum F-beta (beta^2 = 0.3) over 256 evenly spaced thresholds t in [0, 1],
binarising the map as pred > t. A binary prediction gives the same mask at
every t < 1, so f_max reduces to its single-threshold F-beta.

f_weighted
----------
Weighted F-measure (beta^2 = 1) with dependency and location weighting:

1. exact distance transform of the ground truth (nearest foreground pixel)
2. error map E = |pred - gt|
3. each background pixel takes the error of its nearest foreground pixel
   (largest error among equidistant ones), the result is smoothed with a
   7x7 Gaussian (sigma 5) and, on the foreground, replaces E where smaller
4. background importance grows with distance: B = 2 - exp(ln(0.5) / 5 * dist)
5. weighted precision / recall combine into F

Both return 0 when the ground truth is empty; with_flag=True additionally
returns True in that case so callers can tally the sample.
"""

import math
from typing import Tuple, Union

import numpy as np
from scipy import ndimage

from src.imaging.distance import squared_distance_transform
from src.imaging.raster import MaskLike, as_bool, as_float_map, check_same_shape

BETA2_MAX = 0.3
BETA2_WEIGHTED = 1.0
NUM_THRESHOLDS = 256
GAUSS_SIZE = 7
GAUSS_SIGMA = 5.0
DECAY = 5.0
# Above this many distinct foreground error levels the tie rule falls back to
# the transform's own nearest pixel (one distance transform per level).
MAX_TIE_LEVELS = 32


def _safe_div(num: float, den: float) -> float:
    return num / den if den != 0 else 0.0


def f_beta(tp: float, fp: float, fn: float, beta2: float) -> float:
    """F-beta from (possibly weighted) confusion counts; 0 when undefined."""
    precision = _safe_div(tp, tp + fp)
    recall = _safe_div(tp, tp + fn)
    return _safe_div((1.0 + beta2) * precision * recall, beta2 * precision + recall)


def f_max(pred, gt: MaskLike, with_flag: bool = False) -> Union[float, Tuple[float, bool]]:
    """
    Maximum F-beta over 256 thresholds.

    Raises:
        DimensionMismatch: If the shapes differ
    """
    pred_map = as_float_map(pred)
    gt_bits = as_bool(gt)
    check_same_shape(pred_map, gt_bits)

    n_fg = int(np.count_nonzero(gt_bits))
    if n_fg == 0:
        return (0.0, True) if with_flag else 0.0

    best = 0.0
    for t in np.linspace(0.0, 1.0, NUM_THRESHOLDS):
        binary = pred_map > t
        tp = int(np.count_nonzero(binary & gt_bits))
        fp = int(np.count_nonzero(binary)) - tp
        fn = n_fg - tp
        best = max(best, f_beta(tp, fp, fn, BETA2_MAX))
    return (best, False) if with_flag else best


def gaussian_kernel(size: int = GAUSS_SIZE, sigma: float = GAUSS_SIGMA) -> np.ndarray:
    """Normalised 2-D Gaussian, matching MATLAB's fspecial('gaussian')."""
    half = (size - 1) // 2
    y, x = np.ogrid[-half:half + 1, -half:half + 1]
    kernel = np.exp(-(x * x + y * y) / (2.0 * sigma * sigma))
    kernel[kernel < np.finfo(kernel.dtype).eps * kernel.max()] = 0
    return kernel / kernel.sum()


def _propagated_errors(error: np.ndarray, gt: np.ndarray, d2_fg: np.ndarray,
                       nearest_rows: np.ndarray, nearest_cols: np.ndarray) -> np.ndarray:
    """Error map where each background pixel carries its nearest foreground error."""
    propagated = error.copy()
    bg = ~gt
    levels = np.unique(error[gt])[::-1]
    levels = levels[levels > 0]

    if len(levels) > MAX_TIE_LEVELS:
        propagated[bg] = error[nearest_rows[bg], nearest_cols[bg]]
        return propagated

    propagated[bg] = 0.0
    assigned = np.zeros_like(gt)
    for level in levels:
        source = gt & (error >= level)
        d2_level, _, _ = squared_distance_transform(source)
        hit = bg & ~assigned & (d2_level == d2_fg)
        propagated[hit] = level
        assigned |= hit
    return propagated


def f_weighted(pred, gt: MaskLike, with_flag: bool = False) -> Union[float, Tuple[float, bool]]:
    """
    Weighted F-measure.

    Raises:
        DimensionMismatch: If the shapes differ
    """
    pred_map = as_float_map(pred)
    gt_bits = as_bool(gt)
    check_same_shape(pred_map, gt_bits)

    if not gt_bits.any():
        return (0.0, True) if with_flag else 0.0
    if not (pred_map > 0).any():
        return (0.0, False) if with_flag else 0.0

    d2_fg, nearest_rows, nearest_cols = squared_distance_transform(gt_bits)
    error = np.abs(pred_map - gt_bits)
    propagated = _propagated_errors(error, gt_bits, d2_fg, nearest_rows, nearest_cols)

    smoothed = ndimage.convolve(propagated, gaussian_kernel(), mode='constant', cval=0.0)
    min_error = np.where(gt_bits & (smoothed < error), smoothed, error)

    importance = np.where(gt_bits, 1.0, 2.0 - np.exp(math.log(0.5) / DECAY * np.sqrt(d2_fg)))
    weighted_error = min_error * importance

    n_fg = int(np.count_nonzero(gt_bits))
    tp_w = n_fg - float(weighted_error[gt_bits].sum())
    fp_w = float(weighted_error[~gt_bits].sum())
    recall = 1.0 - float(weighted_error[gt_bits].mean())
    precision = _safe_div(tp_w, tp_w + fp_w)
    score = _safe_div((1.0 + BETA2_WEIGHTED) * recall * precision,
                      recall + BETA2_WEIGHTED * precision)
    score = float(min(1.0, max(0.0, score)))
    return (score, False) if with_flag else score
