#!/usr/bin/env python3
"""
Script 02: Run Bench

Command-line front end (see src/cli.py for every subcommand and flag).

Usage:
    python scripts/02_run_bench.py gen --profile camouflaged --count 4 --dims 64x64 --seed 7 --out d/
    python scripts/02_run_bench.py train-rl --data data/scenes/camouflaged_train --out runs/rl --decoding grammar
    python scripts/02_run_bench.py eval --ckpt runs/rl/policy.bin --data data/scenes/camouflaged_eval --stage box
    python scripts/02_run_bench.py ablate-reward --config config/settings.yaml --deterministic
    echo '<think>obj</think><points>3,4</points><labels>1</labels>' | python scripts/02_run_bench.py parse --stage points
"""

import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.append(str(project_root))

from src.cli import cli_main


if __name__ == "__main__":
    sys.exit(cli_main())
