"""
Scripted annotator producing supervised prompt trajectories.

Protocol per scene:
    1. bbox = tight bounds of the ground truth, snapped outward to bin centres,
       then widened one bin per side while the object alone would trip the
       segmenter's flood-through guard inside it
    2. first positive point at the ground-truth pixel farthest from the
       background (row-major first on ties), snapped to the nearest bin centre
    3. segment; while IoU < target and fewer than max_points points: take the
       largest false-negative and the largest false-positive component, and
       add a point at the deepest pixel of the larger one (positive for a
       false negative, negative for a false positive; false negative on ties)
    4. keep the prompt prefix with the best IoU and encode it as tokens with a
       one-filler think block
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage

from src.data_sources.scene_synth import Scene
from src.imaging.distance import distance_to_background
from src.imaging.raster import iou
from src.policy.vocabulary import FILLER_TEXT, NUM_BINS, bin_to_pixel, pixel_to_bin, prompt_to_tokens
from src.prompts.mask_prompt import MaskPrompt
from src.segmenter.region_growing import SegmenterConfig, segment

TARGET_IOU = 0.9
DEFAULT_MAX_POINTS = 6
THINK_FILLERS = 1


@dataclass(frozen=True)
class AnnotationTrajectory:
    scene_id: str
    tokens: Tuple[int, ...]
    iou: float
    prompt: Optional[MaskPrompt] = None

    def to_record(self) -> dict:
        return {'scene_id': self.scene_id, 'tokens': list(self.tokens), 'iou': self.iou}

    @classmethod
    def from_record(cls, record: dict) -> "AnnotationTrajectory":
        missing = [k for k in ('scene_id', 'tokens', 'iou') if k not in record]
        if missing:
            raise ValueError(f"Trajectory record missing keys: {', '.join(missing)}")
        return cls(scene_id=str(record['scene_id']),
                   tokens=tuple(int(t) for t in record['tokens']),
                   iou=float(record['iou']))


def snap_low(pixel: int, dim: int) -> int:
    """Largest bin centre <= pixel (the first centre if none is)."""
    best = bin_to_pixel(0, dim)
    for k in range(NUM_BINS):
        centre = bin_to_pixel(k, dim)
        if centre <= pixel:
            best = centre
    return best


def snap_high(pixel: int, dim: int) -> int:
    """Smallest bin centre >= pixel (the last centre if none is)."""
    for k in range(NUM_BINS):
        centre = bin_to_pixel(k, dim)
        if centre >= pixel:
            return centre
    return bin_to_pixel(NUM_BINS - 1, dim)


def snap_point(x: int, y: int, width: int, height: int) -> Tuple[int, int]:
    return bin_to_pixel(pixel_to_bin(x, width), width), bin_to_pixel(pixel_to_bin(y, height), height)


def deepest_pixel(region: np.ndarray) -> Tuple[int, int]:
    """(x, y) of the region pixel farthest from its outside, row-major first on ties."""
    depth = distance_to_background(region)
    depth = np.where(region, depth, -1.0)
    row, col = np.unravel_index(int(np.argmax(depth)), region.shape)
    return int(col), int(row)


def largest_component(mask: np.ndarray) -> np.ndarray:
    """Largest 4-connected component (lowest label on ties); empty if mask is empty."""
    labels, count = ndimage.label(mask)
    if count == 0:
        return np.zeros_like(mask)
    sizes = np.bincount(labels.ravel())[1:]
    return labels == (int(np.argmax(sizes)) + 1)


def _box_area(bbox: Tuple[int, int, int, int]) -> int:
    x1, y1, x2, y2 = bbox
    return (x2 - x1 + 1) * (y2 - y1 + 1)


def _widen(bbox: Tuple[int, int, int, int], width: int, height: int) -> Tuple[int, int, int, int]:
    x1, y1, x2, y2 = bbox
    return (snap_low(max(x1 - 1, 0), width), snap_low(max(y1 - 1, 0), height),
            snap_high(min(x2 + 1, width - 1), width), snap_high(min(y2 + 1, height - 1), height))


def oracle_annotate(
    scene: Scene,
    cfg: SegmenterConfig = SegmenterConfig(),
    max_points: int = DEFAULT_MAX_POINTS,
    target_iou: float = TARGET_IOU
) -> AnnotationTrajectory:
    """
    Annotate one scene with a box-and-points prompt.

    Raises:
        ValueError: If the scene's ground truth is empty or max_points < 1
    """
    gt = scene.gt.bits
    if not gt.any():
        raise ValueError(f"Scene {scene.scene_id} has an empty ground truth; nothing to annotate")
    if max_points < 1:
        raise ValueError(f"max_points must be >= 1, got {max_points}")
    width, height = scene.width, scene.height

    rows, cols = np.nonzero(gt)
    bbox = (snap_low(int(cols.min()), width), snap_low(int(rows.min()), height),
            snap_high(int(cols.max()), width), snap_high(int(rows.max()), height))
    object_area = int(np.count_nonzero(gt))
    while object_area > cfg.max_region_fraction * _box_area(bbox):
        wider = _widen(bbox, width, height)
        if wider == bbox:
            break
        bbox = wider

    points: List[Tuple[int, int]] = [snap_point(*deepest_pixel(gt), width, height)]
    labels: List[int] = [1]
    history: List[Tuple[MaskPrompt, float]] = []

    while True:
        prompt = MaskPrompt(think=FILLER_TEXT * THINK_FILLERS, bbox=bbox,
                            points=tuple(points), labels=tuple(labels))
        mask = segment(scene.image, prompt, cfg).bits
        score = iou(mask, gt)
        history.append((prompt, score))
        if score >= target_iou or len(points) >= max_points:
            break

        missed = largest_component(gt & ~mask)
        spurious = largest_component(mask & ~gt)
        n_missed, n_spurious = int(missed.sum()), int(spurious.sum())
        if n_missed == 0 and n_spurious == 0:
            break
        region, label = (missed, 1) if n_missed >= n_spurious else (spurious, 0)
        point = snap_point(*deepest_pixel(region), width, height)
        if point in points:
            break
        points.append(point)
        labels.append(label)

    best_prompt, best_iou = history[0]
    for prompt, score in history[1:]:
        if score > best_iou:
            best_prompt, best_iou = prompt, score

    tokens = prompt_to_tokens(best_prompt, width, height, filler_count=THINK_FILLERS)
    return AnnotationTrajectory(scene_id=scene.scene_id, tokens=tuple(tokens),
                                iou=float(best_iou), prompt=best_prompt)


def annotate_scenes(scenes, cfg: SegmenterConfig = SegmenterConfig(),
                    max_points: int = DEFAULT_MAX_POINTS) -> List[AnnotationTrajectory]:
    return [oracle_annotate(scene, cfg, max_points) for scene in scenes]
