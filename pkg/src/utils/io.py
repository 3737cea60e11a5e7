"""
Input/output utilities for saving and loading run artefacts.

This module provides helpers for:
- Saving DataFrames to CSV with consistent formatting
- Appending per-step rows to a growing CSV log (train_log.csv)
- Loading CSV files
- JSON and JSON-lines files (manifests, trajectories, configs)
- Ensuring output directories exist

All tabular and JSON output should flow through these helpers for consistency.
"""

import json
from pathlib import Path
from typing import Iterable, List, Optional

import pandas as pd


def ensure_dir(path: Path) -> None:
    """
    Create directory if it doesn't exist.

    Args:
        path: Path object or string to directory

    Example:
        >>> ensure_dir(Path("runs/ablate_reward/7"))
    """
    Path(path).mkdir(parents=True, exist_ok=True)


def save_csv(
    df: pd.DataFrame,
    file_path: Path,
    float_format: Optional[str] = None,
    quiet: bool = False
) -> Path:
    """
    Save DataFrame to CSV with consistent formatting.

    Args:
        df: DataFrame to save
        file_path: Output path (Path object or string)
        float_format: Optional printf-style float format (e.g. '%.6f')
        quiet: Suppress the confirmation line

    Returns:
        Path to saved file

    Notes:
        - Creates parent directories if they don't exist
        - Saves with index=False and '\\n' line endings so reruns diff cleanly
        - Uses UTF-8 encoding
    """
    file_path = Path(file_path)
    ensure_dir(file_path.parent)

    df.to_csv(file_path, index=False, encoding='utf-8',
              float_format=float_format, lineterminator='\n')
    if not quiet:
        print(f"✓ Saved {len(df)} rows to {file_path}")

    return file_path


def append_csv_rows(
    rows: Iterable[dict],
    file_path: Path,
    columns: List[str],
    float_format: Optional[str] = '%.6f'
) -> Path:
    """
    Append rows to a CSV file, writing the header only when the file is new.

    Args:
        rows: Dicts keyed by column name
        file_path: CSV path
        columns: Column order (documented log schema)
        float_format: printf-style float format

    Returns:
        Path to the CSV file
    """
    file_path = Path(file_path)
    ensure_dir(file_path.parent)

    df = pd.DataFrame(list(rows), columns=columns)
    write_header = not file_path.exists()
    df.to_csv(file_path, mode='a', header=write_header, index=False,
              encoding='utf-8', float_format=float_format, lineterminator='\n')
    return file_path


def load_csv(file_path: Path, quiet: bool = False) -> pd.DataFrame:
    """
    Load CSV file into DataFrame.

    Args:
        file_path: Path to CSV file
        quiet: Suppress the confirmation line

    Returns:
        DataFrame

    Raises:
        FileNotFoundError: If file doesn't exist
    """
    file_path = Path(file_path)

    if not file_path.exists():
        raise FileNotFoundError(f"CSV not found: {file_path}")

    df = pd.read_csv(file_path, encoding='utf-8')
    if not quiet:
        print(f"✓ Loaded {len(df)} rows from {file_path}")

    return df


def save_json(data: dict, file_path: Path, quiet: bool = False) -> Path:
    """
    Save dictionary to JSON file.

    Key order is preserved as inserted, so callers control a stable layout.

    Args:
        data: Dictionary to save
        file_path: Output path
        quiet: Suppress the confirmation line

    Returns:
        Path to saved file
    """
    file_path = Path(file_path)
    ensure_dir(file_path.parent)

    with open(file_path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(data, f, indent=2, ensure_ascii=False)
        f.write('\n')

    if not quiet:
        print(f"✓ Saved JSON to {file_path}")
    return file_path


def load_json(file_path: Path) -> dict:
    """
    Load JSON file into dictionary.

    Raises:
        FileNotFoundError: If file doesn't exist
        json.JSONDecodeError: If the file is not valid JSON
    """
    file_path = Path(file_path)

    if not file_path.exists():
        raise FileNotFoundError(f"JSON not found: {file_path}")

    with open(file_path, 'r', encoding='utf-8') as f:
        return json.load(f)


def save_jsonl(records: Iterable[dict], file_path: Path, quiet: bool = False) -> Path:
    """
    Save records as JSON lines (one compact object per line).
    """
    file_path = Path(file_path)
    ensure_dir(file_path.parent)

    count = 0
    with open(file_path, 'w', encoding='utf-8', newline='\n') as f:
        for record in records:
            f.write(json.dumps(record, separators=(',', ':')) + '\n')
            count += 1

    if not quiet:
        print(f"✓ Saved {count} records to {file_path}")
    return file_path


def load_jsonl(file_path: Path) -> List[dict]:
    """
    Load JSON-lines file; blank lines are skipped.

    Raises:
        FileNotFoundError: If file doesn't exist
    """
    file_path = Path(file_path)

    if not file_path.exists():
        raise FileNotFoundError(f"JSONL not found: {file_path}")

    with open(file_path, 'r', encoding='utf-8') as f:
        return [json.loads(line) for line in f if line.strip()]
