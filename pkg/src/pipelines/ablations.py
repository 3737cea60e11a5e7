"""
Ablation Experiments Pipeline

Two seed-controlled experiments, each emitting CSV tables:

- reward ablation: one shared pre-RL checkpoint, then three RL arms on the
  camouflaged split that differ only in the segmentation reward
  (IoU only, S only, combined). Each arm is evaluated on the camouflaged
  evaluation split together with its mean predicted foreground fraction.
  With free_decoding_arm set, a fourth arm trains the combined reward
  without the grammar mask, so malformed prompts earn a zero format reward.

- strategy ablation: four arms evaluated on the camouflaged evaluation split:
  baseline (untrained policy), rl-only, sft-rl and pure-rl.

Output layout:
    <out>/<arm>/<seed>/train_log.csv
    <out>/<arm>/<seed>/eval.csv
    <out>/<arm>/<seed>/policy.bin
    <out>/ablate_<name>.csv            (one row per arm and seed)
    <out>/ablate_<name>_means.csv      (per-arm means over seeds)
    <out>/ablate_<name>_checks.csv     (seed-majority ordering and collapse checks)

Each (config, seed) run is a pure function of its inputs, so seeds may run in
parallel processes; tables are assembled in seed order afterwards.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Sequence, Tuple

import pandas as pd

from src.data_sources.dataset_io import read_dataset
from src.data_sources.scene_synth import Scene
from src.pipelines.curriculum import (
    STAGE_PROFILES, STAGES, CurriculumConfig, Recipe, run_curriculum, run_stage,
)
from src.pipelines.evaluate_policy import EVAL_COLUMNS, PolicyEvaluation, evaluate_policy
from src.policy.checkpoint import save_checkpoint
from src.policy.recurrent import PolicyParams
from src.prompts.mask_prompt import PromptStage
from src.segmenter.region_growing import SegmenterConfig
from src.training.grpo import GrpoConfig
from src.training.rewards import MetricMode
from src.utils.io import save_csv
from src.utils.math_stats import majority_holds

SEED_ENV_VAR = 'EXPERIMENT_SEED'
REWARD_ARMS = {
    'reward-iou': MetricMode.IOU_ONLY,
    'reward-s': MetricMode.S_ONLY,
    'reward-combined': MetricMode.COMBINED,
}
FREE_DECODING_ARM = 'reward-combined-free'
STRATEGY_ARMS = ('baseline', Recipe.RL_ONLY.value, Recipe.SFT_THEN_RL.value, Recipe.PURE_RL.value)
TABLE_COLUMNS = ['arm', 'seed'] + EVAL_COLUMNS
CHECK_COLUMNS = ['check', 'metric', 'better', 'worse', 'seeds_holding', 'n_seeds', 'majority']

# (metric, better arm, worse arm, strict)
Ordering = Tuple[str, str, str, bool]
REWARD_ORDERINGS: Dict[str, Ordering] = {
    'combined_iou_over_s_only': ('iou', 'reward-combined', 'reward-s', True),
    'combined_s_over_iou_only': ('s', 'reward-combined', 'reward-iou', False),
}
STRATEGY_ORDERINGS: Dict[str, Ordering] = {
    'rl_only_over_baseline': ('iou', 'rl-only', 'baseline', True),
    'sft_rl_over_rl_only': ('iou', 'sft-rl', 'rl-only', False),
    'pure_rl_over_rl_only': ('iou', 'pure-rl', 'rl-only', False),
}
HACKING_CHECK = 's_only_near_empty'
HACKING_MIN_SHARE = 0.8


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything one experiment run depends on.

    Dataset paths are keyed by scene profile ('fine', 'camouflaged'); the
    evaluation split is always camouflaged. With free_decoding_arm set, the
    reward ablation gains a combined-reward arm that samples without the
    grammar mask.
    """

    recipe: str = Recipe.PURE_RL.value
    grpo: GrpoConfig = field(default_factory=lambda: GrpoConfig(decoding='grammar'))
    datasets: Dict[str, str] = field(default_factory=dict)
    eval_dataset: str = ''
    seeds: Tuple[int, ...] = (0, 1, 2)
    out_dir: str = 'data/experiments'
    prerl_steps: int = 100
    rl_steps: int = 200
    sft_epochs: int = 3
    sft_lr: float = 1e-3
    sft_batch_size: int = 8
    segmenter: SegmenterConfig = field(default_factory=SegmenterConfig)
    free_decoding_arm: bool = False

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("ExperimentConfig.seeds must not be empty")
        Recipe.from_name(self.recipe)

    def curriculum(self, seed: int, metric_mode: MetricMode = MetricMode.COMBINED) -> CurriculumConfig:
        return CurriculumConfig(
            grpo=replace(self.grpo, seed=seed),
            prerl_steps=self.prerl_steps,
            rl_steps=self.rl_steps,
            sft_epochs=self.sft_epochs,
            sft_lr=self.sft_lr,
            sft_batch_size=self.sft_batch_size,
            metric_mode=metric_mode,
            segmenter=self.segmenter,
        )

    def check_paths(self, profiles: Sequence[str]) -> None:
        """
        Raises:
            FileNotFoundError: If a needed dataset directory does not exist
        """
        for profile in profiles:
            path = self.datasets.get(profile)
            if not path:
                raise FileNotFoundError(f"No '{profile}' training dataset configured")
            if not Path(path).is_dir():
                raise FileNotFoundError(f"Dataset directory for '{profile}' not found: {path}")
        if not self.eval_dataset or not Path(self.eval_dataset).is_dir():
            raise FileNotFoundError(f"Evaluation dataset not found: {self.eval_dataset or '(unset)'}")


def resolve_seeds(seeds: Sequence[int]) -> Tuple[int, ...]:
    """Configured seeds, or the single seed named by EXPERIMENT_SEED when set."""
    override = os.environ.get(SEED_ENV_VAR)
    if override is None or override.strip() == '':
        return tuple(int(s) for s in seeds)
    try:
        return (int(override),)
    except ValueError:
        raise ValueError(f"{SEED_ENV_VAR} must be an integer, got '{override}'")


def load_stage_datasets(cfg: ExperimentConfig, profiles: Sequence[str]) -> Dict[str, List[Scene]]:
    """Scenes per curriculum stage name, read from the configured profile datasets."""
    by_profile = {profile: read_dataset(Path(cfg.datasets[profile])) for profile in profiles}
    return {stage: by_profile[profile] for stage, profile in STAGE_PROFILES.items() if profile in by_profile}


def _evaluate(policy: PolicyParams, cfg: ExperimentConfig, eval_scenes: Sequence[Scene]) -> PolicyEvaluation:
    constraint = replace(cfg.grpo, stage=PromptStage.BOX_AND_POINTS).constraint()
    return evaluate_policy(policy, eval_scenes, PromptStage.BOX_AND_POINTS, cfg.segmenter, constraint)


def _write_arm(out_dir: Path, policy: PolicyParams, evaluation: PolicyEvaluation) -> None:
    save_checkpoint(policy, out_dir / 'policy.bin')
    save_csv(pd.DataFrame([evaluation.to_row()], columns=EVAL_COLUMNS),
             out_dir / 'eval.csv', float_format='%.6f', quiet=True)


def run_reward_seed(cfg: ExperimentConfig, seed: int, verbose: bool = False) -> List[dict]:
    """All reward-ablation arms for one seed; returns one table row per arm."""
    datasets = load_stage_datasets(cfg, ('fine', 'camouflaged'))
    eval_scenes = read_dataset(Path(cfg.eval_dataset))
    out = Path(cfg.out_dir)

    prerl_dir = out / 'prerl' / str(seed)
    prerl_log = prerl_dir / 'train_log.csv'
    if prerl_log.exists():
        prerl_log.unlink()
    shared, _ = run_stage(STAGES[Recipe.PURE_RL][0], cfg.curriculum(seed), datasets['prerl'],
                          PolicyParams.init(seed), log_path=prerl_log, verbose=verbose)
    save_checkpoint(shared, prerl_dir / 'policy.bin')

    rows = []
    for arm, mode in REWARD_ARMS.items():
        arm_dir = out / arm / str(seed)
        policy = run_curriculum(Recipe.RL_ONLY, cfg.curriculum(seed, mode), {'rl': datasets['rl']},
                                shared, out_dir=arm_dir, verbose=verbose).policy
        evaluation = _evaluate(policy, cfg, eval_scenes)
        _write_arm(arm_dir, policy, evaluation)
        rows.append({'arm': arm, 'seed': seed, **evaluation.to_row()})

    if cfg.free_decoding_arm:
        free_cfg = replace(cfg, grpo=replace(cfg.grpo, decoding='free'))
        arm_dir = out / FREE_DECODING_ARM / str(seed)
        policy = run_curriculum(Recipe.RL_ONLY, free_cfg.curriculum(seed), {'rl': datasets['rl']},
                                shared, out_dir=arm_dir, verbose=verbose).policy
        evaluation = _evaluate(policy, free_cfg, eval_scenes)
        _write_arm(arm_dir, policy, evaluation)
        rows.append({'arm': FREE_DECODING_ARM, 'seed': seed, **evaluation.to_row()})
    return rows


def run_strategy_seed(cfg: ExperimentConfig, seed: int, verbose: bool = False) -> List[dict]:
    """All strategy-ablation arms for one seed; returns one table row per arm."""
    datasets = load_stage_datasets(cfg, ('fine', 'camouflaged'))
    eval_scenes = read_dataset(Path(cfg.eval_dataset))
    out = Path(cfg.out_dir)
    initial = PolicyParams.init(seed)

    rows = []
    for arm in STRATEGY_ARMS:
        arm_dir = out / arm / str(seed)
        if arm == 'baseline':
            policy = initial
        else:
            policy = run_curriculum(Recipe.from_name(arm), cfg.curriculum(seed), datasets,
                                    initial, out_dir=arm_dir, verbose=verbose).policy
        evaluation = _evaluate(policy, cfg, eval_scenes)
        _write_arm(arm_dir, policy, evaluation)
        rows.append({'arm': arm, 'seed': seed, **evaluation.to_row()})
    return rows


def _run_seeds(run_seed: Callable, cfg: ExperimentConfig, seeds: Sequence[int],
               workers: int, deterministic: bool, verbose: bool) -> List[dict]:
    if workers > 1 and not deterministic and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_seed = list(pool.map(run_seed, [cfg] * len(seeds), seeds, [False] * len(seeds)))
    else:
        per_seed = [run_seed(cfg, seed, verbose) for seed in seeds]
    return [row for rows in per_seed for row in rows]


def arm_means(table: pd.DataFrame) -> pd.DataFrame:
    """Per-arm means over seeds, arms in first-seen order."""
    return table.groupby('arm', sort=False)[EVAL_COLUMNS].mean().reset_index()


def ordering_checks(table: pd.DataFrame, orderings: Dict[str, Ordering]) -> pd.DataFrame:
    """
    Seed-majority checks of directional orderings between arms.

    Args:
        table: Per-(arm, seed) rows
        orderings: name -> (metric, better arm, worse arm, strict)

    Returns:
        DataFrame with columns check, metric, better, worse, seeds_holding,
        n_seeds, majority
    """
    per_metric = {}
    records = []
    for name, (metric, better, worse, strict) in orderings.items():
        if metric not in per_metric:
            per_metric[metric] = table.pivot(index='seed', columns='arm', values=metric)
        wide = per_metric[metric]
        holds = wide[better] > wide[worse] if strict else wide[better] >= wide[worse]
        outcomes = holds.tolist()
        records.append({
            'check': name,
            'metric': metric,
            'better': better,
            'worse': worse,
            'seeds_holding': int(sum(outcomes)),
            'n_seeds': len(outcomes),
            'majority': majority_holds(outcomes),
        })
    return pd.DataFrame(records, columns=CHECK_COLUMNS)


def reward_hacking_check(table: pd.DataFrame, min_share: float = HACKING_MIN_SHARE) -> dict:
    """
    Check row for the S-only collapse: per seed, the S-only arm leaves a
    near-empty mask on at least min_share of the evaluation scenes.

    The 'worse' column carries the threshold, since there is no second arm.
    """
    s_only = table[table['arm'] == 'reward-s'].sort_values('seed')
    outcomes = [share >= min_share for share in s_only['near_empty_share']]
    return {
        'check': HACKING_CHECK,
        'metric': 'near_empty_share',
        'better': 'reward-s',
        'worse': f"min_share={min_share:g}",
        'seeds_holding': int(sum(outcomes)),
        'n_seeds': len(outcomes),
        'majority': majority_holds(outcomes),
    }


def reward_hacking_holds(table: pd.DataFrame, min_share: float = HACKING_MIN_SHARE) -> bool:
    return reward_hacking_check(table, min_share)['majority']


def reward_checks(table: pd.DataFrame) -> pd.DataFrame:
    """Reward orderings followed by the S-only collapse row."""
    records = ordering_checks(table, REWARD_ORDERINGS).to_dict('records')
    records.append(reward_hacking_check(table))
    return pd.DataFrame(records, columns=CHECK_COLUMNS)


def strategy_checks(table: pd.DataFrame) -> pd.DataFrame:
    return ordering_checks(table, STRATEGY_ORDERINGS)


def _finish(rows: List[dict], cfg: ExperimentConfig, name: str,
            checks_for: Callable[[pd.DataFrame], pd.DataFrame], verbose: bool) -> pd.DataFrame:
    table = pd.DataFrame(rows, columns=TABLE_COLUMNS)
    out = Path(cfg.out_dir)
    save_csv(table, out / f"{name}.csv", float_format='%.6f', quiet=not verbose)
    save_csv(arm_means(table), out / f"{name}_means.csv", float_format='%.6f', quiet=not verbose)
    checks = checks_for(table)
    save_csv(checks, out / f"{name}_checks.csv", quiet=not verbose)
    if verbose:
        for check in checks.itertuples():
            mark = '✓' if check.majority else '⚠️'
            print(f"   {mark} {check.check}: {check.seeds_holding}/{check.n_seeds} seeds")
    return table


def ablate_reward(cfg: ExperimentConfig, workers: int = 1, deterministic: bool = True,
                  verbose: bool = True) -> pd.DataFrame:
    """
    Reward-function ablation.

    Returns:
        DataFrame with one row per (arm, seed): metric means, mean foreground
        fraction, near-empty share and parse rate

    Raises:
        FileNotFoundError: If a dataset directory is missing
    """
    cfg.check_paths(('fine', 'camouflaged'))
    seeds = resolve_seeds(cfg.seeds)
    if verbose:
        print(f"\n📊 Reward ablation over seeds {list(seeds)}...")
    rows = _run_seeds(run_reward_seed, cfg, seeds, workers, deterministic, verbose)
    return _finish(rows, cfg, 'ablate_reward', reward_checks, verbose)


def ablate_strategy(cfg: ExperimentConfig, workers: int = 1, deterministic: bool = True,
                    verbose: bool = True) -> pd.DataFrame:
    """
    Training-strategy ablation (baseline, rl-only, sft-rl, pure-rl).

    Raises:
        FileNotFoundError: If a dataset directory is missing
    """
    cfg.check_paths(('fine', 'camouflaged'))
    seeds = resolve_seeds(cfg.seeds)
    if verbose:
        print(f"\n📊 Strategy ablation over seeds {list(seeds)}...")
    rows = _run_seeds(run_strategy_seed, cfg, seeds, workers, deterministic, verbose)
    return _finish(rows, cfg, 'ablate_strategy', strategy_checks, verbose)
