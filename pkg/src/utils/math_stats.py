"""
Mathematical and statistical utilities for analysis.

This module provides:
- Rolling averages (reward curves)
- Order-independent means (compensated summation)
- Seed-majority voting for directional ablation checks
"""

import math
from typing import Iterable, Sequence

import pandas as pd


def rolling_mean(
    series: pd.Series,
    window: int = 50,
    min_periods: int = 1
) -> pd.Series:
    """
    Calculate rolling (moving) average.

    Args:
        series: Pandas Series to smooth
        window: Window size in periods (default: 50 steps)
        min_periods: Minimum observations needed (default: 1)

    Returns:
        Series with rolling mean values

    Example:
        >>> s = pd.Series([1, 2, 3, 4, 5])
        >>> rolling_mean(s, window=3).tolist()
        [1.0, 1.5, 2.0, 3.0, 4.0]
    """
    return series.rolling(window=window, min_periods=min_periods).mean()


def compensated_mean(values: Iterable[float]) -> float:
    """
    Arithmetic mean with exactly rounded summation.

    math.fsum makes the result independent of summation order, so per-sample
    work reduced from parallel workers gives the same mean as a sequential pass.

    Returns:
        Mean, or 0.0 for an empty input
    """
    values = list(values)
    if not values:
        return 0.0
    return math.fsum(values) / len(values)


def majority_holds(outcomes: Sequence[bool]) -> bool:
    """
    True when strictly more than half of the per-seed outcomes hold.

    Example:
        >>> majority_holds([True, False, True])
        True
    """
    if not outcomes:
        return False
    return sum(bool(o) for o in outcomes) * 2 > len(outcomes)
