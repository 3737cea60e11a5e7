"""
Plotting styles and configuration for consistent figures.

This module defines:
- Matplotlib style defaults
- Colours for reward curves and ablation arms
- Figure dimensions

Usage:
    from src.plotting.styles import apply_plot_style, RAW_COLOR, SMOOTH_COLOR

    apply_plot_style()
    plt.plot(..., color=SMOOTH_COLOR)
"""

from pathlib import Path
from typing import Dict

import matplotlib.pyplot as plt


# Colour palette (colourblind-friendly)
RAW_COLOR = '#9DB4C0'        # Light blue-gray (per-step values)
SMOOTH_COLOR = '#2E86AB'     # Blue (moving average)
ACCENT_COLOR = '#F18F01'     # Orange (highlights, stage boundaries)
HACK_COLOR = '#A23B72'       # Purple-red (reward-hacking arm)
GRAY = '#6C757D'             # Gray (baseline, reference lines)
DARK_GRAY = '#343A40'        # Dark gray (text, axes)

# One colour per ablation arm; unknown arms fall back to GRAY
ARM_COLORS: Dict[str, str] = {
    'baseline': GRAY,
    'rl-only': RAW_COLOR,
    'sft-rl': ACCENT_COLOR,
    'pure-rl': SMOOTH_COLOR,
    'reward-iou': RAW_COLOR,
    'reward-s': HACK_COLOR,
    'reward-combined': SMOOTH_COLOR,
    'reward-combined-free': ACCENT_COLOR,
}

DEFAULT_FIGSIZE = (10, 5)    # Width x Height in inches
DEFAULT_DPI = 200


def apply_plot_style() -> None:
    """
    Apply consistent matplotlib style settings.

    Call this at the start of any plotting function.
    """
    plt.style.use('default')

    plt.rcParams['font.size'] = 11
    plt.rcParams['axes.titlesize'] = 13
    plt.rcParams['axes.labelsize'] = 11
    plt.rcParams['xtick.labelsize'] = 10
    plt.rcParams['ytick.labelsize'] = 10
    plt.rcParams['legend.fontsize'] = 10

    plt.rcParams['font.family'] = 'sans-serif'
    plt.rcParams['font.sans-serif'] = ['DejaVu Sans', 'Arial', 'Helvetica']

    plt.rcParams['figure.figsize'] = DEFAULT_FIGSIZE
    plt.rcParams['figure.dpi'] = 100
    plt.rcParams['figure.autolayout'] = True

    plt.rcParams['axes.grid'] = True
    plt.rcParams['axes.axisbelow'] = True
    plt.rcParams['grid.alpha'] = 0.3
    plt.rcParams['grid.linestyle'] = '--'

    plt.rcParams['lines.linewidth'] = 2
    plt.rcParams['axes.linewidth'] = 1.2

    plt.rcParams['axes.prop_cycle'] = plt.cycler(
        color=[SMOOTH_COLOR, ACCENT_COLOR, HACK_COLOR, GRAY]
    )


def arm_color(arm: str) -> str:
    return ARM_COLORS.get(arm, GRAY)


def save_figure(
    fig,
    filename: str,
    output_dir,
    dpi: int = DEFAULT_DPI,
    bbox_inches: str = 'tight'
) -> str:
    """
    Save figure with consistent settings.

    Args:
        fig: Matplotlib figure object
        filename: Output filename (e.g., 'reward_curve.png')
        output_dir: Directory to save (Path object or string)
        dpi: Resolution
        bbox_inches: Bounding box setting (default: 'tight')

    Returns:
        Full path to saved file

    Example:
        >>> fig, ax = plt.subplots()
        >>> ax.plot([1, 2, 3])
        >>> save_figure(fig, 'my_plot.png', Path('data/figures'))
        'data/figures/my_plot.png'
    """
    output_path = Path(output_dir) / filename
    output_path.parent.mkdir(parents=True, exist_ok=True)

    # fixed metadata keeps reruns byte-identical
    fig.savefig(output_path, dpi=dpi, bbox_inches=bbox_inches,
                facecolor='white', edgecolor='none', metadata={'Software': None})

    print(f"   ✓ Saved figure: {output_path}")
    return str(output_path)
