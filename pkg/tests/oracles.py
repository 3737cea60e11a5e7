"""
Straight-from-definition reference implementations.

Everything here is written with plain loops over pixels and shares no code
with src/metrics or src/imaging/distance, so agreement between the two is a
real check. Inputs are nested lists or numpy arrays indexed [row][col].
"""

import math

import numpy as np


def _grid(values):
    return [[float(v) for v in row] for row in np.asarray(values, dtype=np.float64)]


def _bits(mask):
    return [[bool(v) for v in row] for row in np.asarray(mask)]


def _clamp(value):
    return min(1.0, max(0.0, value))


def iou(a, b):
    a, b = _bits(a), _bits(b)
    inter = union = 0
    for row_a, row_b in zip(a, b):
        for x, y in zip(row_a, row_b):
            inter += x and y
            union += x or y
    return 1.0 if union == 0 else inter / union


def mae(pred, gt):
    p, g = _grid(pred), _bits(gt)
    total, n = 0.0, 0
    for row_p, row_g in zip(p, g):
        for x, y in zip(row_p, row_g):
            total += abs(x - (1.0 if y else 0.0))
            n += 1
    return total / n


def brute_force_d2(mask):
    """Squared distance of each pixel to the nearest foreground pixel (inf if none)."""
    bits = _bits(mask)
    height, width = len(bits), len(bits[0])
    fg = [(r, c) for r in range(height) for c in range(width) if bits[r][c]]
    out = [[math.inf] * width for _ in range(height)]
    for r in range(height):
        for c in range(width):
            for fr, fc in fg:
                d = (r - fr) ** 2 + (c - fc) ** 2
                if d < out[r][c]:
                    out[r][c] = d
    return out


# --- S-measure -----------------------------------------------------------

def _object_similarity(values):
    n = len(values)
    mu = sum(values) / n
    sigma = math.sqrt(sum((v - mu) ** 2 for v in values) / (n - 1)) if n > 1 else 0.0
    return 2.0 * mu / (mu * mu + 1.0 + sigma)


def _region_ssim(p, g):
    n = len(p)
    mx = sum(p) / n
    my = sum(g) / n
    dof = max(n - 1, 1)
    sx = sum((v - mx) ** 2 for v in p) / dof
    sy = sum((v - my) ** 2 for v in g) / dof
    sxy = sum((a - mx) * (b - my) for a, b in zip(p, g)) / dof
    alpha = 4.0 * mx * my * sxy
    beta = (mx * mx + my * my) * (sx + sy)
    if alpha != 0.0:
        return alpha / beta
    if sx == 0.0 and sy == 0.0:
        return 1.0 if mx == my else 0.0
    return 0.0


def s_measure(pred, gt):
    p, g = _grid(pred), _bits(gt)
    height, width = len(g), len(g[0])
    n = height * width
    fg = [(r, c) for r in range(height) for c in range(width) if g[r][c]]
    mean_pred = sum(sum(row) for row in p) / n
    if not fg:
        return _clamp(1.0 - mean_pred)
    if len(fg) == n:
        return _clamp(mean_pred)

    fg_values = [p[r][c] for r, c in fg]
    bg_values = [1.0 - p[r][c] for r in range(height) for c in range(width) if not g[r][c]]
    s_obj = (len(fg_values) * _object_similarity(fg_values)
             + len(bg_values) * _object_similarity(bg_values)) / n

    x = math.floor(sum(c for _, c in fg) / len(fg) + 0.5) + 1
    y = math.floor(sum(r for r, _ in fg) / len(fg) + 0.5) + 1
    s_reg = 0.0
    for rows in (range(0, y), range(y, height)):
        for cols in (range(0, x), range(x, width)):
            cells = [(r, c) for r in rows for c in cols]
            if not cells:
                continue
            pv = [p[r][c] for r, c in cells]
            gv = [1.0 if g[r][c] else 0.0 for r, c in cells]
            s_reg += len(cells) * _region_ssim(pv, gv)
    s_reg /= n
    return _clamp(0.5 * s_obj + 0.5 * s_reg)


# --- E-measure -----------------------------------------------------------

def e_measure(pred, gt, eps=1e-8):
    p = [[1.0 if v else 0.0 for v in row] for row in _bits(pred)]
    g = [[1.0 if v else 0.0 for v in row] for row in _bits(gt)]
    height, width = len(g), len(g[0])
    n = height * width
    n_fg = sum(sum(row) for row in g)
    mp = sum(sum(row) for row in p) / n
    mg = n_fg / n
    total = 0.0
    for r in range(height):
        for c in range(width):
            if n_fg == 0:
                total += 1.0 - p[r][c]
            elif n_fg == n:
                total += p[r][c]
            else:
                xp = p[r][c] - mp
                xg = g[r][c] - mg
                phi = 2.0 * xp * xg / (xp * xp + xg * xg + eps)
                total += (phi + 1.0) ** 2 / 4.0
    return _clamp(total / (n - 1 + eps))


# --- F-measures ----------------------------------------------------------

def f_beta(tp, fp, fn, beta2):
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    den = beta2 * precision + recall
    return (1.0 + beta2) * precision * recall / den if den else 0.0


def f_max(pred, gt):
    p, g = _grid(pred), _bits(gt)
    n_fg = sum(sum(row) for row in g)
    if n_fg == 0:
        return 0.0
    best = 0.0
    for k in range(256):
        t = k / 255
        tp = fp = 0
        for row_p, row_g in zip(p, g):
            for v, y in zip(row_p, row_g):
                if v > t:
                    if y:
                        tp += 1
                    else:
                        fp += 1
        best = max(best, f_beta(tp, fp, n_fg - tp, 0.3))
    return best


def _gaussian_7x7(sigma=5.0):
    k = [[math.exp(-((i - 3) ** 2 + (j - 3) ** 2) / (2 * sigma * sigma)) for j in range(7)] for i in range(7)]
    total = sum(sum(row) for row in k)
    return [[v / total for v in row] for row in k]


def f_weighted(pred, gt):
    p, g = _grid(pred), _bits(gt)
    height, width = len(g), len(g[0])
    fg = [(r, c) for r in range(height) for c in range(width) if g[r][c]]
    if not fg:
        return 0.0
    if not any(v > 0 for row in p for v in row):
        return 0.0

    error = [[abs(p[r][c] - (1.0 if g[r][c] else 0.0)) for c in range(width)] for r in range(height)]
    d2 = brute_force_d2(g)

    # background pixels take the largest error among their nearest foreground pixels
    propagated = [row[:] for row in error]
    for r in range(height):
        for c in range(width):
            if g[r][c]:
                continue
            best = 0.0
            for fr, fc in fg:
                if (r - fr) ** 2 + (c - fc) ** 2 == d2[r][c]:
                    best = max(best, error[fr][fc])
            propagated[r][c] = best

    kernel = _gaussian_7x7()
    smoothed = [[0.0] * width for _ in range(height)]
    for r in range(height):
        for c in range(width):
            acc = 0.0
            for i in range(7):
                for j in range(7):
                    rr, cc = r + i - 3, c + j - 3
                    if 0 <= rr < height and 0 <= cc < width:
                        acc += kernel[i][j] * propagated[rr][cc]
            smoothed[r][c] = acc

    fg_error_sum = 0.0
    bg_error_sum = 0.0
    for r in range(height):
        for c in range(width):
            if g[r][c]:
                fg_error_sum += min(smoothed[r][c], error[r][c])
            else:
                importance = 2.0 - math.exp(math.log(0.5) / 5.0 * math.sqrt(d2[r][c]))
                bg_error_sum += error[r][c] * importance

    tp = len(fg) - fg_error_sum
    recall = 1.0 - fg_error_sum / len(fg)
    precision = tp / (tp + bg_error_sum) if tp + bg_error_sum else 0.0
    den = recall + precision
    return _clamp(2.0 * recall * precision / den if den else 0.0)


# --- policy --------------------------------------------------------------

def block_means(pixels, grid=8):
    """Block means / 255 of an image whose sides are multiples of grid."""
    pixels = np.asarray(pixels, dtype=np.float64)
    height, width = pixels.shape
    bh, bw = height // grid, width // grid
    out = []
    for i in range(grid):
        for j in range(grid):
            total = 0.0
            for r in range(i * bh, (i + 1) * bh):
                for c in range(j * bw, (j + 1) * bw):
                    total += pixels[r, c]
            out.append(total / (bh * bw) / 255.0)
    return out


def policy_log_prob(params, features, tokens):
    """Teacher-forced log-probability, one step at a time, no grammar mask."""
    drive = params.W_f.dot(features) + params.b
    h = np.tanh(drive)
    total = 0.0
    for t, token in enumerate(tokens):
        if t > 0:
            h = np.tanh(params.W_h.dot(h) + params.W_e.dot(params.E[tokens[t - 1]]) + drive)
        logits = [float(v) for v in params.U.dot(h)]
        top = max(logits)
        log_z = top + math.log(sum(math.exp(v - top) for v in logits))
        total += logits[token] - log_z
    return total
