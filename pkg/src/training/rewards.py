"""
Composite reward: format reward plus segmentation reward.

    total = format + seg
    format = 1.0 if the text parses under the stage grammar, else 0.0
    seg    = w_iou * IoU + w_s * S    (Combined)
           = IoU                      (IoUOnly)
           = S                        (SOnly)
    seg    = 0 when parsing or the bounds check fails

IoU and S are measured between the segmenter's binary mask and the scene's
ground truth, so total lies in [0, 2].
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple

from src.data_sources.scene_synth import Scene
from src.imaging.raster import foreground_fraction, iou
from src.metrics.structure_measure import s_measure
from src.policy.recurrent import TokenSequence
from src.policy.vocabulary import decode
from src.prompts.mask_prompt import PromptStage
from src.segmenter.region_growing import SegmenterConfig, SegmentOutcome, segment_text

DEFAULT_WEIGHTS = (0.7, 0.3)
# Appended to sequences cut at the length cap so they never parse.
TRUNCATION_SUFFIX = '[truncated]'


class MetricMode(Enum):
    IOU_ONLY = 'iou'
    S_ONLY = 's'
    COMBINED = 'combined'

    @classmethod
    def from_name(cls, name: str) -> "MetricMode":
        for mode in cls:
            if mode.value == name or mode.name.lower() == name.lower():
                return mode
        available = ', '.join(m.value for m in cls)
        raise KeyError(f"Unknown metric mode '{name}'. Available modes: {available}")


@dataclass(frozen=True)
class RewardBreakdown:
    total: float
    format: float
    segmentation: float
    foreground_fraction: float
    outcome: SegmentOutcome
    iou: float = 0.0
    s: float = 0.0


def segmentation_reward(iou_value: float, s_value: float, mode: MetricMode,
                        weights: Tuple[float, float] = DEFAULT_WEIGHTS) -> float:
    if mode is MetricMode.IOU_ONLY:
        return iou_value
    if mode is MetricMode.S_ONLY:
        return s_value
    w_iou, w_s = weights
    return w_iou * iou_value + w_s * s_value


def reward_breakdown(
    text: str,
    scene: Scene,
    stage: PromptStage,
    weights: Tuple[float, float] = DEFAULT_WEIGHTS,
    metric_mode: MetricMode = MetricMode.COMBINED,
    seg_cfg: SegmenterConfig = SegmenterConfig()
) -> RewardBreakdown:
    """
    Reward components for one output text on one scene.

    Example:
        >>> rb = reward_breakdown("garbage", scene, PromptStage.BOX_AND_POINTS)
        >>> rb.total
        0.0
    """
    result = segment_text(scene.image, text, stage, seg_cfg)
    if result.outcome is SegmentOutcome.FORMAT_FAILURE:
        return RewardBreakdown(0.0, 0.0, 0.0, 0.0, result.outcome)
    if result.outcome is SegmentOutcome.BOUNDS_FAILURE:
        return RewardBreakdown(1.0, 1.0, 0.0, 0.0, result.outcome)

    iou_value = iou(result.mask, scene.gt)
    s_value = s_measure(result.mask, scene.gt)
    seg = segmentation_reward(iou_value, s_value, metric_mode, weights)
    return RewardBreakdown(
        total=1.0 + seg,
        format=1.0,
        segmentation=seg,
        foreground_fraction=foreground_fraction(result.mask),
        outcome=result.outcome,
        iou=iou_value,
        s=s_value,
    )


def total_reward(
    text: str,
    scene: Scene,
    stage: PromptStage,
    weights: Tuple[float, float] = DEFAULT_WEIGHTS,
    metric_mode: MetricMode = MetricMode.COMBINED,
    seg_cfg: SegmenterConfig = SegmenterConfig()
) -> float:
    return reward_breakdown(text, scene, stage, weights, metric_mode, seg_cfg).total


def sequence_text(seq: TokenSequence, width: int, height: int) -> str:
    """Decoded text of a rollout; a sequence without EOS is marked as truncated."""
    text = decode(seq.tokens, width, height)
    return text if seq.terminated else text + TRUNCATION_SUFFIX


class RewardCache:
    """Memo of reward breakdowns keyed by (scene, text) for one reward setting."""

    def __init__(self, stage: PromptStage, weights: Tuple[float, float],
                 metric_mode: MetricMode, seg_cfg: SegmenterConfig):
        self.stage = stage
        self.weights = weights
        self.metric_mode = metric_mode
        self.seg_cfg = seg_cfg
        self._store: Dict[tuple, RewardBreakdown] = {}
        self.hits = 0

    def __call__(self, text: str, scene: Scene) -> RewardBreakdown:
        key = (scene.scene_id, scene.width, scene.height, text)
        cached: Optional[RewardBreakdown] = self._store.get(key)
        if cached is not None:
            self.hits += 1
            return cached
        value = reward_breakdown(text, scene, self.stage, self.weights, self.metric_mode, self.seg_cfg)
        self._store[key] = value
        return value

    def __len__(self) -> int:
        return len(self._store)
