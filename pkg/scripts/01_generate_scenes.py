#!/usr/bin/env python3
"""
Script 01: Generate Scenes

Writes the scene splits listed under `scenes.splits` in config/settings.yaml
to data/scenes/<split>/ (PGM image/mask pairs + manifest.json).

Usage:
    python scripts/01_generate_scenes.py
    python scripts/01_generate_scenes.py --splits camouflaged_train camouflaged_eval
    python scripts/01_generate_scenes.py --dims 32x32
"""

import argparse
import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.append(str(project_root))

from src.config import load_config, get_data_paths
from src.data_sources.dataset_io import write_dataset
from src.data_sources.scene_synth import SceneProfile, make_split, parse_dims


def generate_split(name: str, spec: dict, dims: tuple, output_dir: Path) -> Path:
    """
    Generate and write one split.

    Args:
        name: Split name (output subdirectory)
        spec: Mapping with profile, count, base_seed
        dims: (width, height)
        output_dir: Root scenes directory

    Returns:
        Path to the written split directory
    """
    profile = SceneProfile.from_name(spec['profile'])
    print(f"\n📊 Generating {spec['count']} {profile.value} scenes for {name}...")
    scenes = make_split(profile, int(spec['count']), dims, int(spec.get('base_seed', 0)))
    split_dir = output_dir / name
    write_dataset(scenes, split_dir, quiet=True)
    print(f"   ✓ Wrote {len(scenes)} scenes to {split_dir}")
    return split_dir


def main():
    """Main entry point for scene generation."""

    parser = argparse.ArgumentParser(
        description="Generate synthetic scene splits for prompt-policy training"
    )
    parser.add_argument(
        '--splits',
        nargs='+',
        default=None,
        help='Splits to generate (default: all splits in settings)'
    )
    parser.add_argument(
        '--dims',
        type=str,
        default=None,
        help='Scene size WIDTHxHEIGHT (overrides config)'
    )
    args = parser.parse_args()

    try:
        config = load_config()
        output_dir = get_data_paths(config)['scenes']
    except FileNotFoundError:
        print("❌ Configuration file not found!")
        print("   Please copy config/settings.example.yaml to config/settings.yaml")
        sys.exit(1)

    splits = config['scenes']['splits']
    dims = parse_dims(args.dims or config['scenes']['dims'])
    names = args.splits or list(splits)
    unknown = [n for n in names if n not in splits]
    if unknown:
        print(f"❌ Unknown split(s): {', '.join(unknown)}")
        print(f"   Available: {', '.join(splits)}")
        sys.exit(1)

    print("\n" + "=" * 70)
    print("🚀 SCENE GENERATION")
    print("=" * 70)
    print(f"Splits: {', '.join(names)}")
    print(f"Size: {dims[0]}x{dims[1]}")
    print(f"Output directory: {output_dir}")
    print("=" * 70)

    for name in names:
        generate_split(name, splits[name], dims, output_dir)

    print("\n" + "=" * 70)
    print("✅ SCENE GENERATION COMPLETE")
    print("=" * 70)
    print("\nNext steps:")
    print("1. Run: python scripts/02_run_bench.py ablate-reward --config config/settings.yaml")
    print("2. Then: python scripts/03_make_figures.py")
    print("=" * 70 + "\n")


if __name__ == "__main__":
    main()
