"""
Evaluate Policy Pipeline

Greedy-decodes a prompt for every scene, runs the segmenter, and scores the
resulting masks against ground truth with the full metric set.

Unparseable or out-of-bounds outputs count as empty masks, so a policy is
never scored on a subset of the split.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

from src.data_sources.scene_synth import Scene
from src.imaging.raster import BinaryMask, foreground_fraction
from src.metrics.report import MetricReport, evaluate_dataset
from src.policy.grammar import GrammarConstraint
from src.policy.recurrent import PolicyParams, greedy, scene_features
from src.prompts.mask_prompt import PromptStage
from src.segmenter.region_growing import SegmenterConfig, SegmentOutcome, segment_text
from src.training.rewards import sequence_text

NEAR_EMPTY_FRACTION = 0.05
EVAL_COLUMNS = ['s', 'e', 'f_max', 'f_w', 'mae', 'iou', 'n', 'fg_fraction', 'near_empty_share', 'parse_rate']


@dataclass(frozen=True)
class PolicyEvaluation:
    report: MetricReport
    fg_fraction_mean: float
    near_empty_share: float
    parse_rate: float
    fg_fractions: tuple = ()

    def to_row(self) -> dict:
        row = self.report.to_row()
        row.update({
            'fg_fraction': self.fg_fraction_mean,
            'near_empty_share': self.near_empty_share,
            'parse_rate': self.parse_rate,
        })
        return row


def predict_masks(
    params: PolicyParams,
    scenes: Sequence[Scene],
    stage: PromptStage,
    seg_cfg: SegmenterConfig = SegmenterConfig(),
    constraint: Optional[GrammarConstraint] = None
) -> List[tuple]:
    """(mask, outcome) per scene from greedy decoding; failures give an empty mask."""
    out = []
    for scene in scenes:
        seq = greedy(params, scene_features(scene.image), constraint)
        result = segment_text(scene.image, sequence_text(seq, scene.width, scene.height), stage, seg_cfg)
        mask = result.mask if result.ok else BinaryMask.empty(scene.width, scene.height)
        out.append((mask, result.outcome))
    return out


def evaluate_policy(
    params: PolicyParams,
    scenes: Sequence[Scene],
    stage: PromptStage,
    seg_cfg: SegmenterConfig = SegmenterConfig(),
    constraint: Optional[GrammarConstraint] = None,
    workers: int = 1
) -> PolicyEvaluation:
    """
    Score a policy on an evaluation split.

    Args:
        params: Policy parameters
        scenes: Evaluation scenes
        stage: Prompt grammar the outputs are parsed under
        seg_cfg: Segmenter settings
        constraint: Grammar mask for decoding (None = free decoding)
        workers: Processes used for the metric computation

    Returns:
        PolicyEvaluation with the MetricReport, the mean predicted foreground
        fraction and the share of scenes with a near-empty (< 5%) mask

    Raises:
        ValueError: If scenes is empty
    """
    if not scenes:
        raise ValueError("evaluate_policy needs at least one scene")
    predictions = predict_masks(params, scenes, stage, seg_cfg, constraint)
    masks = [mask for mask, _ in predictions]
    report = evaluate_dataset(masks, [scene.gt for scene in scenes], workers=workers)

    fractions = [foreground_fraction(mask) for mask in masks]
    near_empty = sum(1 for f in fractions if f < NEAR_EMPTY_FRACTION)
    parsed = sum(1 for _, outcome in predictions if outcome is not SegmentOutcome.FORMAT_FAILURE)
    return PolicyEvaluation(
        report=report,
        fg_fraction_mean=math.fsum(fractions) / len(fractions),
        near_empty_share=near_empty / len(fractions),
        parse_rate=parsed / len(predictions),
        fg_fractions=tuple(fractions),
    )
