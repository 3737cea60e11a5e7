"""
Enhanced-alignment measure (E-measure) for binary predictions.

Both maps are biased by their means, aligned per pixel and enhanced:

    xi_p = pred - mean(pred),  xi_g = gt - mean(gt)
    phi  = 2 * xi_p * xi_g / (xi_p^2 + xi_g^2 + EPS)
    enh  = (phi + 1)^2 / 4
    E    = sum(enh) / (w * h - 1 + EPS)

Degenerate ground truth: all background -> enh = 1 - pred; all foreground ->
enh = pred. The result is clamped to [0, 1] (the w*h - 1 normaliser lets a
perfect match exceed 1 slightly).
"""

import numpy as np

from src.imaging.raster import MaskLike, as_bool, check_same_shape

EPS = 1e-8


def e_measure(pred: MaskLike, gt: MaskLike) -> float:
    """
    Threshold-free E-measure of a binary prediction.

    Raises:
        DimensionMismatch: If the shapes differ
    """
    pred_bits = as_bool(pred)
    gt_bits = as_bool(gt)
    check_same_shape(pred_bits, gt_bits)

    p = pred_bits.astype(np.float64)
    g = gt_bits.astype(np.float64)
    n_fg = np.count_nonzero(gt_bits)

    if n_fg == 0:
        enhanced = 1.0 - p
    elif n_fg == gt_bits.size:
        enhanced = p
    else:
        xi_p = p - p.mean()
        xi_g = g - g.mean()
        align = 2.0 * xi_p * xi_g / (xi_p * xi_p + xi_g * xi_g + EPS)
        enhanced = (align + 1.0) ** 2 / 4.0

    score = float(enhanced.sum()) / (gt_bits.size - 1 + EPS)
    return float(min(1.0, max(0.0, score)))
