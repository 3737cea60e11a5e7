"""
Supervised fine-tuning on oracle trajectories.

Loss per mini-batch: mean negative log-likelihood per target token under
teacher forcing,

    loss = - sum_seq sum_t log p(tok_t) / sum_seq len(seq)

minimised by plain gradient descent. Mini-batches are drawn from a seeded
shuffle of the trajectory list every epoch.
"""

import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.data_sources.scene_synth import Scene
from src.policy.grammar import GrammarConstraint
from src.policy.recurrent import PolicyParams, greedy, log_prob_and_grad, scene_features
from src.prompts.mask_prompt import PromptStage, format_reward
from src.training.oracle import AnnotationTrajectory
from src.training.rewards import sequence_text
from src.utils.io import load_jsonl, save_jsonl


def save_trajectories(trajectories: Sequence[AnnotationTrajectory], file_path: Path,
                      quiet: bool = False) -> Path:
    return save_jsonl((t.to_record() for t in trajectories), file_path, quiet=quiet)


def load_trajectories(file_path: Path) -> List[AnnotationTrajectory]:
    return [AnnotationTrajectory.from_record(r) for r in load_jsonl(file_path)]


def _scene_index(scenes: Sequence[Scene]) -> Dict[str, Scene]:
    return {scene.scene_id: scene for scene in scenes}


def sft_train(
    policy: PolicyParams,
    trajectories: Sequence[AnnotationTrajectory],
    scenes: Sequence[Scene],
    epochs: int = 1,
    lr: float = 1e-3,
    batch_size: int = 8,
    seed: int = 0,
    constraint: Optional[GrammarConstraint] = None,
    verbose: bool = False
) -> Tuple[PolicyParams, List[float]]:
    """
    Teacher-forced cross-entropy training.

    Args:
        policy: Starting parameters
        trajectories: Oracle trajectories (not modified)
        scenes: Scenes the trajectories refer to (matched by scene id)
        epochs: Passes over the trajectory set
        lr: Gradient-descent step size
        batch_size: Trajectories per update
        seed: Shuffle seed
        constraint: Grammar mask applied to the softmax (None = free)
        verbose: Print the loss after every epoch

    Returns:
        (trained policy, mean per-token loss of each epoch, measured before
        each mini-batch update)

    Raises:
        ValueError: If there are no trajectories
        KeyError: If a trajectory refers to an unknown scene
    """
    if not trajectories:
        raise ValueError("sft_train needs at least one trajectory")
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")

    index = _scene_index(scenes)
    features = {}
    for traj in trajectories:
        if traj.scene_id not in index:
            raise KeyError(f"Trajectory refers to unknown scene '{traj.scene_id}'")
        if traj.scene_id not in features:
            features[traj.scene_id] = scene_features(index[traj.scene_id].image)

    V, h, d = policy.dims
    losses: List[float] = []
    for epoch in range(epochs):
        order = np.random.default_rng([seed, epoch]).permutation(len(trajectories))
        nll_terms: List[float] = []
        token_total = 0
        for start in range(0, len(order), batch_size):
            batch = [trajectories[i] for i in order[start:start + batch_size]]
            grad_sum = np.zeros(policy.num_parameters())
            batch_tokens = 0
            for traj in batch:
                lp, grad = log_prob_and_grad(policy, features[traj.scene_id], traj.tokens, constraint)
                nll_terms.append(-lp)
                grad_sum += grad.flat()
                batch_tokens += len(traj.tokens)
            token_total += batch_tokens
            # descent on the NLL is ascent on the log-likelihood
            step = PolicyParams.from_flat(grad_sum / batch_tokens, V, h, d)
            policy = policy.add_scaled(step, lr)
        losses.append(math.fsum(nll_terms) / token_total)
        if verbose:
            print(f"   epoch {epoch + 1}/{epochs}  loss {losses[-1]:.4f}")
    return policy, losses


def greedy_parse_rate(
    policy: PolicyParams,
    scenes: Sequence[Scene],
    stage: PromptStage,
    constraint: Optional[GrammarConstraint] = None
) -> float:
    """Share of scenes whose greedy decoding parses under the stage grammar."""
    if not scenes:
        return 0.0
    parsed = 0
    for scene in scenes:
        seq = greedy(policy, scene_features(scene.image), constraint)
        parsed += format_reward(sequence_text(seq, scene.width, scene.height), stage) == 1.0
    return parsed / len(scenes)
