"""
Configuration loader for the prompt-policy benchmark.

This module loads settings from config/settings.yaml and turns its sections
into the frozen config objects used throughout the codebase.

Usage:
    from src.config import load_config, grpo_config_from_dict

    cfg = load_config()
    grpo = grpo_config_from_dict(cfg['grpo'])
    print(grpo.group_size)
"""

from dataclasses import fields
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from src.pipelines.ablations import ExperimentConfig, resolve_seeds
from src.prompts.mask_prompt import PromptStage
from src.segmenter.region_growing import SegmenterConfig
from src.training.grpo import GrpoConfig

REQUIRED_SECTIONS = ['data', 'scenes', 'segmenter', 'grpo', 'experiments']


def get_project_root() -> Path:
    """
    Get the absolute path to the project root directory.

    Returns:
        Path object pointing to project root
    """
    # This file is in src/config.py, so parent.parent is the project root
    return Path(__file__).parent.parent


def read_yaml(path: Path) -> Dict[str, Any]:
    """
    Read a YAML (or JSON) mapping.

    Raises:
        FileNotFoundError: If the file doesn't exist
        ValueError: If the document is not a mapping
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        data = yaml.safe_load(f)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping at the top level, got {type(data).__name__}")
    return data


def load_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Load configuration from YAML file.

    Args:
        config_path: Optional path to config file. If None, uses default
                    location: config/settings.yaml

    Returns:
        Dictionary containing all configuration settings

    Raises:
        FileNotFoundError: If settings.yaml doesn't exist
        ValueError: If a required section is missing
        yaml.YAMLError: If YAML is malformed

    Example:
        >>> cfg = load_config()
        >>> cfg['grpo']['group_size']
        4
    """
    if config_path is None:
        config_path = get_project_root() / "config" / "settings.yaml"
    else:
        config_path = Path(config_path)

    if not config_path.exists():
        raise FileNotFoundError(
            f"Configuration file not found: {config_path}\n"
            f"Did you copy config/settings.example.yaml to config/settings.yaml?"
        )

    config = read_yaml(config_path)
    for key in REQUIRED_SECTIONS:
        if key not in config:
            raise ValueError(f"Missing required config section: {key}")
    return config


def get_data_paths(config: Dict[str, Any]) -> Dict[str, Path]:
    """
    Convert relative data paths in config to absolute Path objects.

    Args:
        config: Configuration dictionary from load_config()

    Returns:
        Dictionary with keys: 'scenes', 'experiments', 'figures', 'checkpoints'
    """
    project_root = get_project_root()
    data = config['data']
    return {
        'scenes': project_root / data['out_scenes'],
        'experiments': project_root / data['out_experiments'],
        'figures': project_root / data['out_figures'],
        'checkpoints': project_root / data['out_checkpoints'],
    }


def _check_keys(section: str, raw: Dict[str, Any], allowed) -> None:
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        raise ValueError(
            f"Unknown key(s) in '{section}': {', '.join(unknown)}. "
            f"Accepted keys: {', '.join(sorted(allowed))}"
        )


def _field_names(cls) -> list:
    return [f.name for f in fields(cls)]


def segmenter_config_from_dict(raw: Optional[Dict[str, Any]]) -> SegmenterConfig:
    raw = dict(raw or {})
    _check_keys('segmenter', raw, _field_names(SegmenterConfig))
    return SegmenterConfig(**raw)


def grpo_config_from_dict(raw: Optional[Dict[str, Any]]) -> GrpoConfig:
    """
    Build a GrpoConfig from a mapping using GrpoConfig field names.

    The stage may be given by name ('points' / 'box').

    Raises:
        ValueError: On unknown keys or invalid values
        KeyError: On an unknown stage name
    """
    raw = dict(raw or {})
    _check_keys('grpo', raw, _field_names(GrpoConfig))
    if 'stage' in raw and not isinstance(raw['stage'], PromptStage):
        raw['stage'] = PromptStage.from_name(str(raw['stage']))
    return GrpoConfig(**raw)


def experiment_config_from_dict(raw: Dict[str, Any], base_dir: Optional[Path] = None) -> ExperimentConfig:
    """
    Build an ExperimentConfig; nested 'grpo' and 'segmenter' mappings go
    through their own builders. Relative dataset and output paths are
    resolved against base_dir (default: project root). The EXPERIMENT_SEED
    environment variable replaces the seed list.

    Raises:
        ValueError: On unknown keys, invalid values or an empty seed list
    """
    raw = dict(raw or {})
    _check_keys('experiments', raw, _field_names(ExperimentConfig))
    base = Path(base_dir) if base_dir is not None else get_project_root()

    def resolve(path: str) -> str:
        return str(path) if Path(path).is_absolute() else str(base / path)

    if 'grpo' in raw:
        # experiments decode under the grammar unless told otherwise
        grpo_raw = {'decoding': 'grammar', **dict(raw['grpo'] or {})}
        raw['grpo'] = grpo_config_from_dict(grpo_raw)
    if 'segmenter' in raw:
        raw['segmenter'] = segmenter_config_from_dict(raw['segmenter'])
    if 'datasets' in raw:
        raw['datasets'] = {str(k): resolve(v) for k, v in dict(raw['datasets']).items()}
    if 'eval_dataset' in raw:
        raw['eval_dataset'] = resolve(raw['eval_dataset'])
    if 'out_dir' in raw:
        raw['out_dir'] = resolve(raw['out_dir'])
    if 'seeds' in raw:
        raw['seeds'] = resolve_seeds(raw['seeds'] or ())
    else:
        raw['seeds'] = resolve_seeds(ExperimentConfig.__dataclass_fields__['seeds'].default)
    return ExperimentConfig(**raw)


def load_experiment_config(path: Path, base_dir: Optional[Path] = None) -> ExperimentConfig:
    """
    Read an experiment config file (YAML or JSON). A full settings file is
    accepted too, in which case its 'experiments' section is used.
    """
    data = read_yaml(path)
    if 'experiments' in data and isinstance(data['experiments'], dict):
        data = data['experiments']
    return experiment_config_from_dict(data, base_dir)
