"""
Curriculum Pipeline

Runs a training recipe as an ordered list of stages, carrying the policy
forward from one stage to the next:

    pure-rl   prerl (fine, points-only RL)  ->  rl (camouflaged, box-and-points RL)
    rl-only   rl (camouflaged, box-and-points RL)
    sft-rl    sft (oracle trajectories on camouflaged)  ->  rl (camouflaged RL)

Every RL stage freezes its own reference policy at its start (train_grpo
takes the incoming policy as the reference), so the KL estimate on the first
step after a stage boundary is exactly zero.

Datasets are passed as a mapping from stage name to scenes.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from src.data_sources.scene_synth import Scene
from src.policy.recurrent import PolicyParams
from src.prompts.mask_prompt import PromptStage
from src.segmenter.region_growing import SegmenterConfig
from src.training.grpo import GrpoConfig, TrainStats, train_grpo
from src.training.oracle import annotate_scenes
from src.training.rewards import MetricMode
from src.training.sft import save_trajectories, sft_train


class Recipe(Enum):
    PURE_RL = 'pure-rl'
    RL_ONLY = 'rl-only'
    SFT_THEN_RL = 'sft-rl'

    @classmethod
    def from_name(cls, name: str) -> "Recipe":
        for recipe in cls:
            if recipe.value == name or recipe.name.lower() == name.lower():
                return recipe
        available = ', '.join(r.value for r in cls)
        raise KeyError(f"Unknown recipe '{name}'. Available recipes: {available}")


@dataclass(frozen=True)
class CurriculumStage:
    name: str
    kind: str                # 'rl' or 'sft'
    prompt_stage: PromptStage


STAGES = {
    Recipe.PURE_RL: (
        CurriculumStage('prerl', 'rl', PromptStage.POINTS_ONLY),
        CurriculumStage('rl', 'rl', PromptStage.BOX_AND_POINTS),
    ),
    Recipe.RL_ONLY: (
        CurriculumStage('rl', 'rl', PromptStage.BOX_AND_POINTS),
    ),
    Recipe.SFT_THEN_RL: (
        CurriculumStage('sft', 'sft', PromptStage.BOX_AND_POINTS),
        CurriculumStage('rl', 'rl', PromptStage.BOX_AND_POINTS),
    ),
}

# Profile each stage trains on when datasets are assembled from scene splits.
STAGE_PROFILES = {'prerl': 'fine', 'sft': 'camouflaged', 'rl': 'camouflaged'}


@dataclass(frozen=True)
class CurriculumConfig:
    grpo: GrpoConfig = field(default_factory=GrpoConfig)
    prerl_steps: int = 100
    rl_steps: int = 200
    sft_epochs: int = 1
    sft_lr: float = 1e-3
    sft_batch_size: int = 8
    metric_mode: MetricMode = MetricMode.COMBINED
    segmenter: SegmenterConfig = field(default_factory=SegmenterConfig)

    def __post_init__(self):
        if self.prerl_steps < 0 or self.rl_steps < 0:
            raise ValueError(f"Stage step counts must be >= 0, got prerl={self.prerl_steps} rl={self.rl_steps}")
        if self.sft_epochs < 0:
            raise ValueError(f"sft_epochs must be >= 0, got {self.sft_epochs}")

    def stage_grpo(self, stage: CurriculumStage) -> GrpoConfig:
        steps = self.prerl_steps if stage.name == 'prerl' else self.rl_steps
        return replace(self.grpo, stage=stage.prompt_stage, total_steps=steps)


@dataclass
class CurriculumResult:
    policy: PolicyParams
    history: List[TrainStats]
    sft_losses: List[float] = field(default_factory=list)
    stage_policies: Dict[str, PolicyParams] = field(default_factory=dict)


def recipe_stages(recipe: Recipe) -> Tuple[CurriculumStage, ...]:
    return STAGES[recipe]


def check_datasets(recipe: Recipe, datasets: Dict[str, Sequence[Scene]]) -> None:
    """
    Raises:
        ValueError: Naming the first stage whose dataset is missing or empty
    """
    for stage in STAGES[recipe]:
        if not datasets.get(stage.name):
            raise ValueError(
                f"Recipe '{recipe.value}' stage '{stage.name}' has no dataset "
                f"(expected {STAGE_PROFILES[stage.name]} scenes)"
            )


def run_curriculum(
    recipe: Recipe,
    cfg: CurriculumConfig,
    datasets: Dict[str, Sequence[Scene]],
    policy: PolicyParams,
    out_dir: Optional[Path] = None,
    verbose: bool = True
) -> CurriculumResult:
    """
    Execute the recipe's stages in order.

    Args:
        recipe: Training recipe
        cfg: Stage budgets and shared GRPO / SFT settings
        datasets: Scenes per stage name ('prerl', 'sft', 'rl')
        policy: Initial policy
        out_dir: If given, train_log.csv, trajectories.jsonl and stage
                 checkpoints are written here
        verbose: Print progress

    Returns:
        CurriculumResult with the final policy, the concatenated per-step
        TrainStats of every RL stage and the SFT loss curve

    Raises:
        ValueError: If a stage's dataset is missing
    """
    check_datasets(recipe, datasets)
    log_path = Path(out_dir) / 'train_log.csv' if out_dir is not None else None
    if log_path is not None and log_path.exists():
        log_path.unlink()

    result = CurriculumResult(policy=policy, history=[])
    for stage in STAGES[recipe]:
        trajectory_path = Path(out_dir) / 'trajectories.jsonl' if out_dir is not None else None
        policy, record = run_stage(stage, cfg, datasets[stage.name], policy,
                                   log_path, trajectory_path, verbose)
        if stage.kind == 'sft':
            result.sft_losses.extend(record)
        else:
            result.history.extend(record)
        result.stage_policies[stage.name] = policy

    result.policy = policy
    return result


def run_stage(
    stage: CurriculumStage,
    cfg: CurriculumConfig,
    scenes: Sequence[Scene],
    policy: PolicyParams,
    log_path: Optional[Path] = None,
    trajectory_path: Optional[Path] = None,
    verbose: bool = True
) -> Tuple[PolicyParams, list]:
    """
    Run one curriculum stage.

    Returns:
        (policy after the stage, SFT loss curve or RL TrainStats history)
    """
    scenes = list(scenes)
    if stage.kind == 'sft':
        if verbose:
            print(f"\n📊 Annotating {len(scenes)} scenes for stage {stage.name}...")
        trajectories = annotate_scenes(scenes, cfg.segmenter, cfg.grpo.max_points)
        if trajectory_path is not None:
            save_trajectories(trajectories, trajectory_path, quiet=not verbose)
        if cfg.sft_epochs == 0:
            return policy, []
        return sft_train(
            policy, trajectories, scenes,
            epochs=cfg.sft_epochs, lr=cfg.sft_lr, batch_size=cfg.sft_batch_size,
            seed=cfg.grpo.seed, constraint=cfg.stage_grpo(stage).constraint(), verbose=verbose,
        )
    return train_grpo(
        policy, scenes, cfg.stage_grpo(stage), cfg.metric_mode,
        stage_name=stage.name, seg_cfg=cfg.segmenter, log_path=log_path, verbose=verbose,
    )
