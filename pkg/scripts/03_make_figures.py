#!/usr/bin/env python3
"""
Script 03: Make Figures

Generates figures from experiment outputs:
- Reward curve (raw per-step reward + 50-step moving average) for every
  train_log.csv under the experiments directory
- Ablation bar charts from ablate_reward.csv / ablate_strategy.csv

Figures are saved to data/figures/ as PNG.

Usage:
    python scripts/03_make_figures.py
    python scripts/03_make_figures.py --experiments runs/ --window 20
"""

import argparse
import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.append(str(project_root))

from src.config import load_config, get_data_paths
from src.plotting.plot_training_curves import plot_ablation_bars, plot_reward_curve
from src.utils.io import load_csv

ABLATION_FIGURES = {
    'ablate_reward': [('iou', 'Mean IoU by reward function'),
                      ('s', 'Mean S-measure by reward function'),
                      ('fg_fraction', 'Mean predicted foreground fraction')],
    'ablate_strategy': [('iou', 'Mean IoU by training strategy'),
                        ('s', 'Mean S-measure by training strategy')],
}


def make_reward_curves(experiments_dir: Path, figures_dir: Path, window: int) -> list:
    """One reward-curve figure per <arm>/<seed>/train_log.csv."""
    print("\n" + "=" * 70)
    print("📊 REWARD CURVES")
    print("=" * 70)
    paths = []
    for log_path in sorted(experiments_dir.glob('*/*/train_log.csv')):
        arm, seed = log_path.parent.parent.name, log_path.parent.name
        log = load_csv(log_path, quiet=True)
        if log.empty:
            print(f"   ⚠️  Empty log: {log_path}")
            continue
        paths.append(plot_reward_curve(log, figures_dir, title=f"Reward during training ({arm}, seed {seed})",
                                       filename=f"fig_reward_{arm}_seed{seed}.png", window=window))
    return paths


def make_ablation_bars(experiments_dir: Path, figures_dir: Path) -> list:
    print("\n" + "=" * 70)
    print("📊 ABLATION CHARTS")
    print("=" * 70)
    paths = []
    for name, figures in ABLATION_FIGURES.items():
        table_path = experiments_dir / f"{name}.csv"
        if not table_path.exists():
            print(f"   ⚠️  {table_path} not found, skipping")
            continue
        table = load_csv(table_path)
        for metric, title in figures:
            paths.append(plot_ablation_bars(table, metric, figures_dir, title, f"fig_{name}_{metric}.png"))
    return paths


def main():
    """Main entry point for figure generation script."""

    parser = argparse.ArgumentParser(description="Generate reward-curve and ablation figures")
    parser.add_argument(
        '--experiments',
        type=str,
        default=None,
        help='Experiments directory (default: data.out_experiments from config)'
    )
    parser.add_argument(
        '--window',
        type=int,
        default=50,
        help='Moving-average window in steps (default: 50)'
    )
    args = parser.parse_args()

    try:
        config = load_config()
        paths = get_data_paths(config)
    except FileNotFoundError:
        print("❌ Configuration file not found!")
        sys.exit(1)

    experiments_dir = Path(args.experiments) if args.experiments else paths['experiments']
    figures_dir = paths['figures']
    if not experiments_dir.is_dir():
        print(f"❌ Experiments directory not found: {experiments_dir}")
        sys.exit(1)

    figures = make_reward_curves(experiments_dir, figures_dir, args.window)
    figures += make_ablation_bars(experiments_dir, figures_dir)

    print("\n" + "=" * 70)
    print(f"✅ GENERATED {len(figures)} FIGURES in {figures_dir}")
    print("=" * 70 + "\n")


if __name__ == "__main__":
    main()
