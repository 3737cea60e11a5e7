"""
Exact Euclidean distance transform.

squared_distance_transform(mask) gives, for every pixel, the squared Euclidean
distance to the nearest foreground pixel together with that pixel's
coordinates. Two separable passes of the 1-D lower envelope of parabolas
(Felzenszwalb & Huttenlocher): first down each column, then along each row
using the column results as the sampled function.

Distances are exact integers (held in float64 so that "no foreground" can be
inf). Ties go to the lower index in each pass.
"""

import math
from typing import List, Sequence, Tuple

import numpy as np

from src.imaging.raster import MaskLike, as_bool

INF = math.inf


def _lower_envelope(f: Sequence[float]) -> Tuple[List[float], List[int]]:
    """
    1-D squared distance transform of a sampled function.

    Args:
        f: f[q] is the cost at site q (inf = no site)

    Returns:
        (d, arg) with d[p] = min_q (p - q)^2 + f[q] and arg[p] the minimizing q
        (-1 when every f[q] is inf)
    """
    n = len(f)
    sites = [q for q in range(n) if f[q] != INF]
    if not sites:
        return [INF] * n, [-1] * n

    v = [0] * len(sites)
    z = [0.0] * (len(sites) + 1)
    k = 0
    v[0] = sites[0]
    z[0] = -INF
    z[1] = INF
    for q in sites[1:]:
        fq = f[q] + q * q
        while True:
            p = v[k]
            s = (fq - (f[p] + p * p)) / (2 * q - 2 * p)
            if s <= z[k]:
                k -= 1
            else:
                break
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = INF

    d = [0.0] * n
    arg = [0] * n
    k = 0
    for p in range(n):
        while z[k + 1] < p:
            k += 1
        q = v[k]
        d[p] = (p - q) * (p - q) + f[q]
        arg[p] = q
    return d, arg


def squared_distance_transform(mask: MaskLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Squared distance of every pixel to the nearest foreground pixel.

    Args:
        mask: Foreground mask (foreground pixels have distance 0)

    Returns:
        (d2, nearest_rows, nearest_cols):
            d2: float64 (height, width), integer-valued, inf if the mask is empty
            nearest_rows / nearest_cols: int64 coordinates of a nearest
            foreground pixel, -1 if the mask is empty
    """
    bits = as_bool(mask)
    height, width = bits.shape

    col_d2 = np.full((height, width), INF)
    col_arg = np.full((height, width), -1, dtype=np.int64)
    for c in range(width):
        f = [0.0 if bits[r, c] else INF for r in range(height)]
        d, arg = _lower_envelope(f)
        col_d2[:, c] = d
        col_arg[:, c] = arg

    d2 = np.full((height, width), INF)
    rows = np.full((height, width), -1, dtype=np.int64)
    cols = np.full((height, width), -1, dtype=np.int64)
    for r in range(height):
        d, arg = _lower_envelope(col_d2[r, :].tolist())
        d2[r, :] = d
        for c, v in enumerate(arg):
            if v >= 0:
                cols[r, c] = v
                rows[r, c] = col_arg[r, v]
    return d2, rows, cols


def distance_to_background(mask: MaskLike) -> np.ndarray:
    """
    Euclidean distance of each foreground pixel to the nearest background pixel
    (0 on background). Pixels with no background anywhere get inf.
    """
    bits = as_bool(mask)
    d2, _, _ = squared_distance_transform(~bits)
    return np.sqrt(d2)
