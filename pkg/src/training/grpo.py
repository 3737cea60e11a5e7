"""
Group relative policy optimisation for the prompt policy.

One step on a batch of scenes:

1. The current parameters are frozen as the behaviour snapshot (pi_old).
   Each scene gets G rollouts from pi_old, seeded by (seed, step, scene, i).
2. Rollouts are decoded, rewarded, and normalised within their group:
       A_i = (r_i - mean(r)) / (std_pop(r) + 1e-8)
3. For mu inner epochs the clipped surrogate with a k3 KL penalty is
   maximised by plain gradient ascent:
       rho_i = exp(logp_new_i - logp_old_i)
       J     = mean_i min(rho_i A_i, clip(rho_i, 1 - eps, 1 + eps) A_i)
               - beta * mean_i k3_i
       k3_i  = exp(d_i) - d_i - 1,   d_i = logp_ref_i - logp_new_i  (via expm1, never negative)
   The batch objective is the mean of the per-scene J.

Ratios are sequence-level. logp_old and logp_ref are recomputed by teacher
forcing so that rho = 1 exactly on the first epoch.

Train log columns:
    stage,step,reward_mean,reward_min,reward_max,format_mean,seg_mean,
    kl_mean,clip_fraction,fg_fraction_mean
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from src.data_sources.scene_synth import Scene
from src.policy.checkpoint import save_checkpoint
from src.policy.grammar import GrammarConstraint
from src.policy.recurrent import (
    PolicyParams, TokenSequence, log_prob, log_prob_and_grad, rollout_rng, sample, scene_features,
)
from src.prompts.mask_prompt import PromptStage
from src.segmenter.region_growing import SegmenterConfig
from src.training.rewards import MetricMode, RewardBreakdown, RewardCache, sequence_text
from src.utils.io import append_csv_rows

ADVANTAGE_EPS = 1e-8
DECODING_MODES = ('free', 'grammar')

LOG_COLUMNS = [
    'stage', 'step', 'reward_mean', 'reward_min', 'reward_max', 'format_mean',
    'seg_mean', 'kl_mean', 'clip_fraction', 'fg_fraction_mean',
]


@dataclass(frozen=True)
class GrpoConfig:
    group_size: int = 4
    clip_eps: float = 0.2
    kl_coeff: float = 0.04
    learning_rate: float = 1e-3
    inner_epochs: int = 2
    batch_scenes: int = 24
    w_iou: float = 0.7
    w_s: float = 0.3
    stage: PromptStage = PromptStage.BOX_AND_POINTS
    total_steps: int = 200
    seed: int = 0
    decoding: str = 'free'
    max_points: int = 6
    log_every: int = 10

    def __post_init__(self):
        if self.group_size < 2:
            raise ValueError(f"group_size must be >= 2, got {self.group_size}")
        if not 0 < self.clip_eps < 1:
            raise ValueError(f"clip_eps must lie in (0, 1), got {self.clip_eps}")
        if self.kl_coeff < 0:
            raise ValueError(f"kl_coeff must be >= 0, got {self.kl_coeff}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.inner_epochs < 1:
            raise ValueError(f"inner_epochs must be >= 1, got {self.inner_epochs}")
        if self.batch_scenes < 1:
            raise ValueError(f"batch_scenes must be >= 1, got {self.batch_scenes}")
        if self.total_steps < 0:
            raise ValueError(f"total_steps must be >= 0, got {self.total_steps}")
        if abs(self.w_iou + self.w_s - 1.0) > 1e-9:
            raise ValueError(f"Reward weights must sum to 1, got w_iou={self.w_iou} w_s={self.w_s}")
        if self.decoding not in DECODING_MODES:
            raise ValueError(f"decoding must be one of {', '.join(DECODING_MODES)}, got '{self.decoding}'")

    @property
    def weights(self) -> Tuple[float, float]:
        return self.w_iou, self.w_s

    def constraint(self) -> Optional[GrammarConstraint]:
        if self.decoding == 'grammar':
            return GrammarConstraint(self.stage, self.max_points)
        return None


@dataclass(frozen=True)
class TrainStats:
    stage: str
    step: int
    reward_mean: float
    reward_min: float
    reward_max: float
    format_mean: float
    seg_mean: float
    kl_mean: float
    clip_fraction: float
    fg_fraction_mean: float
    epoch_clip_fractions: Tuple[float, ...] = ()

    def to_row(self) -> dict:
        return {name: getattr(self, name) for name in LOG_COLUMNS}


@dataclass
class GroupRollout:
    """G rollouts of one scene with everything the surrogate needs."""

    scene: Scene
    features: np.ndarray
    sequences: List[TokenSequence]
    rewards: List[RewardBreakdown]
    advantages: np.ndarray
    logp_old: np.ndarray
    logp_ref: np.ndarray


def compute_advantages(rewards: Sequence[float]) -> np.ndarray:
    """
    Group-normalised advantages.

    Raises:
        ValueError: If fewer than two rewards are given

    Example:
        >>> compute_advantages([1.0, 0.0, 0.0, 1.0]).round(6).tolist()
        [1.0, -1.0, -1.0, 1.0]
    """
    r = np.asarray(rewards, dtype=np.float64)
    if r.ndim != 1 or r.size < 2:
        raise ValueError(f"Advantages need a group of at least 2 rewards, got {r.size}")
    if np.all(r == r[0]):
        return np.zeros_like(r)
    return (r - r.mean()) / (r.std() + ADVANTAGE_EPS)


def _check_finite(name: str, values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{name} contains NaN or infinite values: {values}")


def clipped_mask(logp_new, logp_old, advantages, eps: float) -> np.ndarray:
    """True where the clipped branch wins the min (the sample's gradient is zero)."""
    ratio = np.exp(np.asarray(logp_new, dtype=np.float64) - np.asarray(logp_old, dtype=np.float64))
    adv = np.asarray(advantages, dtype=np.float64)
    return ratio * adv > np.clip(ratio, 1.0 - eps, 1.0 + eps) * adv


def surrogate_objective(
    logp_new: Sequence[float],
    logp_old: Sequence[float],
    logp_ref: Sequence[float],
    advantages: Sequence[float],
    eps: float,
    beta: float
) -> Tuple[float, np.ndarray]:
    """
    Clipped surrogate with k3 KL penalty for one group.

    Returns:
        (J, w) with w_i = dJ / d logp_new_i

    Raises:
        ValueError: On mismatched lengths or non-finite inputs
    """
    new = np.asarray(logp_new, dtype=np.float64)
    old = np.asarray(logp_old, dtype=np.float64)
    ref = np.asarray(logp_ref, dtype=np.float64)
    adv = np.asarray(advantages, dtype=np.float64)
    if not (new.shape == old.shape == ref.shape == adv.shape) or new.ndim != 1 or new.size == 0:
        raise ValueError(
            f"Surrogate inputs must be equal-length 1-D lists, got {new.shape}, {old.shape}, "
            f"{ref.shape}, {adv.shape}"
        )
    for name, values in (('logp_new', new), ('logp_old', old), ('logp_ref', ref), ('advantages', adv)):
        _check_finite(name, values)

    G = new.size
    ratio = np.exp(new - old)
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1.0 - eps, 1.0 + eps) * adv
    chosen = np.minimum(unclipped, clipped)
    delta = ref - new
    k3 = np.expm1(delta) - delta

    objective = float(chosen.sum() / G - beta * k3.sum() / G)
    policy_weight = np.where(unclipped <= clipped, unclipped, 0.0)
    weights = policy_weight / G + beta * np.expm1(delta) / G
    return objective, weights


def kl_estimates(logp_new, logp_ref) -> np.ndarray:
    delta = np.asarray(logp_ref, dtype=np.float64) - np.asarray(logp_new, dtype=np.float64)
    return np.expm1(delta) - delta


def collect_rollouts(
    policy: PolicyParams,
    ref_policy: PolicyParams,
    scenes: Sequence[Scene],
    cfg: GrpoConfig,
    rewarder: RewardCache,
    step: int = 0
) -> List[GroupRollout]:
    constraint = cfg.constraint()
    groups = []
    for scene_index, scene in enumerate(scenes):
        features = scene_features(scene.image)
        sequences, rewards = [], []
        for i in range(cfg.group_size):
            rng = rollout_rng(cfg.seed, step, scene_index, i)
            seq = sample(policy, features, rng, constraint)
            sequences.append(seq)
            rewards.append(rewarder(sequence_text(seq, scene.width, scene.height), scene))
        groups.append(GroupRollout(
            scene=scene,
            features=features,
            sequences=sequences,
            rewards=rewards,
            advantages=compute_advantages([r.total for r in rewards]),
            logp_old=np.array([log_prob(policy, features, s.tokens, constraint) for s in sequences]),
            logp_ref=np.array([log_prob(ref_policy, features, s.tokens, constraint) for s in sequences]),
        ))
    return groups


def surrogate_and_grad(
    params: PolicyParams,
    groups: Sequence[GroupRollout],
    cfg: GrpoConfig
) -> Tuple[float, PolicyParams, float, float]:
    """
    Batch objective (mean over scenes), its gradient, the clip fraction and
    the mean k3 estimate, all at `params`.
    """
    constraint = cfg.constraint()
    total_grad = np.zeros(params.num_parameters())
    objective = 0.0
    clipped = 0
    kls = []
    n_samples = 0
    for group in groups:
        logp_new, grads = [], []
        for seq in group.sequences:
            lp, grad = log_prob_and_grad(params, group.features, seq.tokens, constraint)
            logp_new.append(lp)
            grads.append(grad.flat())
        J, weights = surrogate_objective(logp_new, group.logp_old, group.logp_ref,
                                         group.advantages, cfg.clip_eps, cfg.kl_coeff)
        objective += J
        for w, g in zip(weights, grads):
            total_grad += w * g
        clipped += int(np.count_nonzero(clipped_mask(logp_new, group.logp_old, group.advantages, cfg.clip_eps)))
        kls.extend(kl_estimates(logp_new, group.logp_ref).tolist())
        n_samples += len(group.sequences)

    n_groups = len(groups)
    V, h, d = params.dims
    grad = PolicyParams.from_flat(total_grad / n_groups, V, h, d)
    return objective / n_groups, grad, clipped / n_samples, math.fsum(kls) / n_samples


def batch_objective(params: PolicyParams, groups: Sequence[GroupRollout], cfg: GrpoConfig) -> float:
    """Batch surrogate value only (used for finite-difference checks)."""
    constraint = cfg.constraint()
    total = 0.0
    for group in groups:
        logp_new = [log_prob(params, group.features, s.tokens, constraint) for s in group.sequences]
        J, _ = surrogate_objective(logp_new, group.logp_old, group.logp_ref,
                                   group.advantages, cfg.clip_eps, cfg.kl_coeff)
        total += J
    return total / len(groups)


def train_step(
    policy: PolicyParams,
    ref_policy: PolicyParams,
    scenes: Sequence[Scene],
    cfg: GrpoConfig,
    metric_mode: MetricMode = MetricMode.COMBINED,
    step: int = 0,
    stage_name: str = 'rl',
    rewarder: Optional[RewardCache] = None,
    seg_cfg: SegmenterConfig = SegmenterConfig()
) -> Tuple[PolicyParams, TrainStats]:
    """
    One GRPO update on a batch of scenes.

    Returns:
        (updated policy snapshot, TrainStats for the step)

    Raises:
        ValueError: If the batch is empty
    """
    if not scenes:
        raise ValueError("train_step needs a non-empty batch of scenes")
    if rewarder is None:
        rewarder = RewardCache(cfg.stage, cfg.weights, metric_mode, seg_cfg)

    groups = collect_rollouts(policy, ref_policy, scenes, cfg, rewarder, step)

    params = policy
    epoch_clips = []
    kl_first = 0.0
    for epoch in range(cfg.inner_epochs):
        _, grad, clip_fraction, kl_mean = surrogate_and_grad(params, groups, cfg)
        if epoch == 0:
            kl_first = kl_mean
        epoch_clips.append(clip_fraction)
        params = params.add_scaled(grad, cfg.learning_rate)

    breakdowns = [r for g in groups for r in g.rewards]
    totals = [r.total for r in breakdowns]
    stats = TrainStats(
        stage=stage_name,
        step=step,
        reward_mean=math.fsum(totals) / len(totals),
        reward_min=min(totals),
        reward_max=max(totals),
        format_mean=math.fsum(r.format for r in breakdowns) / len(breakdowns),
        seg_mean=math.fsum(r.segmentation for r in breakdowns) / len(breakdowns),
        kl_mean=kl_first,
        clip_fraction=math.fsum(epoch_clips) / len(epoch_clips),
        fg_fraction_mean=math.fsum(r.foreground_fraction for r in breakdowns) / len(breakdowns),
        epoch_clip_fractions=tuple(epoch_clips),
    )
    return params, stats


def batch_indices(n_scenes: int, batch_size: int, seed: int) -> Iterator[List[int]]:
    """
    Endless batches walking through seeded permutations of range(n_scenes);
    a fresh permutation is drawn for every pass.
    """
    if n_scenes < 1:
        raise ValueError("Cannot draw batches from an empty dataset")
    batch_size = min(batch_size, n_scenes)
    epoch = 0
    order: List[int] = []
    while True:
        batch = []
        while len(batch) < batch_size:
            if not order:
                order = np.random.default_rng([seed, epoch]).permutation(n_scenes).tolist()
                epoch += 1
            batch.append(order.pop(0))
        yield batch


def train_grpo(
    policy: PolicyParams,
    scenes: Sequence[Scene],
    cfg: GrpoConfig,
    metric_mode: MetricMode = MetricMode.COMBINED,
    stage_name: str = 'rl',
    seg_cfg: SegmenterConfig = SegmenterConfig(),
    log_path: Optional[Path] = None,
    checkpoint_dir: Optional[Path] = None,
    checkpoint_every: int = 0,
    verbose: bool = True
) -> Tuple[PolicyParams, List[TrainStats]]:
    """
    Run cfg.total_steps GRPO steps on one dataset.

    The reference policy is the policy passed in, frozen for the whole stage.

    Args:
        policy: Starting parameters (also the frozen reference)
        scenes: Stage training scenes
        cfg: GrpoConfig
        metric_mode: Segmentation reward variant
        stage_name: Label written to the train log
        seg_cfg: Segmenter settings used by the reward
        log_path: train_log.csv to append one row per step to
        checkpoint_dir: Where to write step checkpoints
        checkpoint_every: Checkpoint period in steps (0 = never)
        verbose: Print progress every cfg.log_every steps

    Returns:
        (final policy, per-step TrainStats)
    """
    if not scenes:
        raise ValueError(f"Stage '{stage_name}' has no training scenes")

    ref_policy = policy
    rewarder = RewardCache(cfg.stage, cfg.weights, metric_mode, seg_cfg)
    batches = batch_indices(len(scenes), cfg.batch_scenes, cfg.seed)
    history: List[TrainStats] = []

    if verbose:
        print(f"\n📊 Training stage {stage_name} ({cfg.total_steps} steps, "
              f"{metric_mode.value} reward, {cfg.decoding} decoding)...")

    steps = tqdm(range(cfg.total_steps), desc=stage_name, disable=not verbose, leave=False)
    for step in steps:
        batch = [scenes[i] for i in next(batches)]
        policy, stats = train_step(policy, ref_policy, batch, cfg, metric_mode, step,
                                   stage_name, rewarder, seg_cfg)
        history.append(stats)
        if log_path is not None:
            append_csv_rows([stats.to_row()], log_path, LOG_COLUMNS)
        if checkpoint_dir is not None and checkpoint_every > 0 and (step + 1) % checkpoint_every == 0:
            save_checkpoint(policy, Path(checkpoint_dir) / f"{stage_name}_step{step + 1:05d}.bin")
        if verbose and cfg.log_every > 0 and (step + 1) % cfg.log_every == 0:
            steps.write(f"   step {step + 1:4d}  reward {stats.reward_mean:.3f}  "
                        f"format {stats.format_mean:.2f}  seg {stats.seg_mean:.3f}  "
                        f"kl {stats.kl_mean:.4f}  clip {stats.clip_fraction:.2f}")

    if verbose and history:
        print(f"   ✓ Stage {stage_name} done: final mean reward {history[-1].reward_mean:.3f}")
    return policy, history
