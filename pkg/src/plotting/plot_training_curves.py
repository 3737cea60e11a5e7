"""
Training and ablation figures.

This module creates:
- Reward curves from train_log.csv (raw per-step values + moving average)
- Ablation bar charts (mean over seeds with per-seed points)

All plots use consistent styling from styles.py.
"""

from pathlib import Path
from typing import Optional, Sequence

import matplotlib.pyplot as plt
import pandas as pd

from src.plotting.styles import (
    ACCENT_COLOR, DARK_GRAY, RAW_COLOR, SMOOTH_COLOR,
    apply_plot_style, arm_color, save_figure,
)
from src.utils.math_stats import rolling_mean

MOVING_AVERAGE_WINDOW = 50


def reward_curve_frame(log: pd.DataFrame, window: int = MOVING_AVERAGE_WINDOW) -> pd.DataFrame:
    """
    Add a global step index and the moving average of reward_mean.

    Stages are laid end to end in file order, so a two-stage curriculum
    plots as one continuous curve.

    Args:
        log: train_log.csv contents
        window: Moving-average window in steps

    Returns:
        DataFrame with columns stage, step, global_step, reward_mean, reward_ma

    Raises:
        ValueError: If the log lacks the stage / step / reward_mean columns
    """
    missing = [c for c in ('stage', 'step', 'reward_mean') if c not in log.columns]
    if missing:
        raise ValueError(f"Train log is missing columns: {', '.join(missing)}")
    frame = log[['stage', 'step', 'reward_mean']].reset_index(drop=True).copy()
    frame['global_step'] = range(len(frame))
    frame['reward_ma'] = rolling_mean(frame['reward_mean'], window=window)
    return frame


def plot_reward_curve(
    log: pd.DataFrame,
    output_dir: Path,
    title: str = 'Reward during training',
    filename: str = 'fig_reward_curve.png',
    window: int = MOVING_AVERAGE_WINDOW
) -> Path:
    """
    Plot per-step mean reward with its moving average; dotted lines mark
    stage boundaries.

    Example:
        >>> log = load_csv(Path('data/experiments/pure-rl/0/train_log.csv'))
        >>> plot_reward_curve(log, Path('data/figures'))
    """
    apply_plot_style()
    frame = reward_curve_frame(log, window)

    fig, ax = plt.subplots()
    ax.plot(frame['global_step'], frame['reward_mean'], color=RAW_COLOR, linewidth=1, label='reward (per step)')
    ax.plot(frame['global_step'], frame['reward_ma'], color=SMOOTH_COLOR, label=f'{window}-step moving average')

    boundaries = frame.index[frame['stage'] != frame['stage'].shift()].tolist()[1:]
    for b in boundaries:
        ax.axvline(b, color=ACCENT_COLOR, linestyle=':', linewidth=1.5)
        ax.text(b, 1.95, f" {frame.loc[b, 'stage']}", color=ACCENT_COLOR, va='top', fontsize=9)

    ax.set_ylim(0.0, 2.0)
    ax.set_xlabel('Training step')
    ax.set_ylabel('Total reward (format + segmentation)')
    ax.set_title(title, fontweight='bold')
    ax.legend(loc='lower right', framealpha=0.9)

    save_path = save_figure(fig, filename, output_dir)
    plt.close(fig)
    return Path(save_path)


def plot_ablation_bars(
    table: pd.DataFrame,
    metric: str,
    output_dir: Path,
    title: str,
    filename: str,
    arms: Optional[Sequence[str]] = None
) -> Path:
    """
    Bar chart of an ablation metric: bar = mean over seeds, dots = seeds.

    Args:
        table: Ablation table with columns arm, seed, <metric>
        metric: Column to plot (e.g. 'iou', 's', 'fg_fraction')
        output_dir: Where to save
        title: Chart title
        filename: Output filename
        arms: Arm order (default: first-seen order in the table)
    """
    apply_plot_style()
    if metric not in table.columns:
        raise ValueError(f"Ablation table has no column '{metric}'")
    if arms is None:
        arms = list(dict.fromkeys(table['arm']))

    fig, ax = plt.subplots(figsize=(8, 5))
    means = [table.loc[table['arm'] == arm, metric].mean() for arm in arms]
    bars = ax.bar(arms, means, color=[arm_color(a) for a in arms], alpha=0.8,
                  edgecolor=DARK_GRAY, linewidth=1.2)
    for x, arm in enumerate(arms):
        values = table.loc[table['arm'] == arm, metric]
        ax.scatter([x] * len(values), values, color=DARK_GRAY, s=18, zorder=3)
    for bar, value in zip(bars, means):
        ax.text(bar.get_x() + bar.get_width() / 2, bar.get_height(), f'{value:.3f}',
                ha='center', va='bottom', fontsize=10, fontweight='bold')

    ax.set_ylabel(metric)
    ax.set_title(title, fontweight='bold')
    ax.grid(True, axis='y', alpha=0.3)

    save_path = save_figure(fig, filename, output_dir)
    plt.close(fig)
    return Path(save_path)
