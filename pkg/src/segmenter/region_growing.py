"""
Prompt-driven region-growing segmenter.

Each labelled point seeds a breadth-first region: a neighbour joins when its
intensity is within `tolerance` of the running mean of the pixels admitted so
far. A pixel that fails the test is marked visited and never retested, so the
result depends only on the fixed neighbour order (row-major: up, left, right,
down; for 8-connectivity the eight offsets in row-major order).

    mask = union(positive regions) minus union(negative regions)

- A bbox confines growth to the box (inclusive corners); a seed outside the
  box grows nothing.
- A positive region larger than max_region_fraction of the allowed area (the
  box, or the frame) is discarded.
- Negative regions are subtracted after all positive growth.
"""

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from src.imaging.raster import BinaryMask, GrayImage
from src.prompts.mask_prompt import FormatError, MaskPrompt, PromptStage, parse

OFFSETS_4 = ((-1, 0), (0, -1), (0, 1), (1, 0))
OFFSETS_8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


@dataclass(frozen=True)
class SegmenterConfig:
    tolerance: float = 12
    connectivity: int = 4
    max_region_fraction: float = 0.9

    def __post_init__(self):
        if not 1 <= self.tolerance <= 64:
            raise ValueError(f"tolerance must lie in [1, 64], got {self.tolerance}")
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if not 0 < self.max_region_fraction <= 1:
            raise ValueError(f"max_region_fraction must lie in (0, 1], got {self.max_region_fraction}")

    @property
    def offsets(self) -> Tuple[Tuple[int, int], ...]:
        return OFFSETS_4 if self.connectivity == 4 else OFFSETS_8


class PromptOutOfBounds(ValueError):
    """A prompt coordinate lies outside the image."""

    def __init__(self, point: Tuple[int, int], width: int, height: int):
        super().__init__(f"Prompt point {point} outside {width}x{height} image")
        self.point = point


class SegmentOutcome(Enum):
    OK = 'ok'
    FORMAT_FAILURE = 'format_failure'
    BOUNDS_FAILURE = 'bounds_failure'


@dataclass(frozen=True)
class SegmentResult:
    mask: BinaryMask
    outcome: SegmentOutcome
    prompt: Optional[MaskPrompt] = None

    @property
    def ok(self) -> bool:
        return self.outcome is SegmentOutcome.OK


def grow_region(
    pixels: List[List[int]],
    seed: Tuple[int, int],
    allowed: np.ndarray,
    cfg: SegmenterConfig
) -> np.ndarray:
    """
    Running-mean BFS from seed (x, y) inside the `allowed` pixels.

    Args:
        pixels: Intensities as nested lists, pixels[y][x]
        seed: (x, y)
        allowed: Bool array of pixels growth may enter
        cfg: SegmenterConfig

    Returns:
        Bool array of the admitted pixels (empty if the seed is not allowed)
    """
    height, width = allowed.shape
    region = np.zeros((height, width), dtype=bool)
    x, y = seed
    if not allowed[y, x]:
        return region

    allowed_rows = allowed.tolist()
    visited = [[False] * width for _ in range(height)]
    visited[y][x] = True
    region[y, x] = True
    total = pixels[y][x]
    count = 1
    tolerance = cfg.tolerance
    offsets = cfg.offsets

    queue = deque([(y, x)])
    while queue:
        cy, cx = queue.popleft()
        for dy, dx in offsets:
            ny, nx = cy + dy, cx + dx
            if ny < 0 or ny >= height or nx < 0 or nx >= width:
                continue
            if visited[ny][nx] or not allowed_rows[ny][nx]:
                continue
            visited[ny][nx] = True
            value = pixels[ny][nx]
            # |value - total/count| <= tolerance, kept in integers
            if abs(value * count - total) <= tolerance * count:
                region[ny, nx] = True
                total += value
                count += 1
                queue.append((ny, nx))
    return region


def check_bounds(prompt: MaskPrompt, width: int, height: int) -> None:
    """
    Raises:
        PromptOutOfBounds: For the first point (or bbox corner) outside the image
    """
    corners = []
    if prompt.bbox is not None:
        x1, y1, x2, y2 = prompt.bbox
        corners = [(x1, y1), (x2, y2)]
    for x, y in list(prompt.points) + corners:
        if x >= width or y >= height:
            raise PromptOutOfBounds((x, y), width, height)


def segment(image: GrayImage, prompt: MaskPrompt, cfg: SegmenterConfig = SegmenterConfig()) -> BinaryMask:
    """
    Binary mask produced by a prompt on an image.

    Raises:
        PromptOutOfBounds: If any prompt coordinate lies outside the image
    """
    height, width = image.shape
    check_bounds(prompt, width, height)

    allowed = np.zeros((height, width), dtype=bool)
    if prompt.bbox is not None:
        x1, y1, x2, y2 = prompt.bbox
        allowed[y1:y2 + 1, x1:x2 + 1] = True
    else:
        allowed[:, :] = True
    area = int(np.count_nonzero(allowed))

    pixels = image.pixels.astype(np.int64).tolist()
    positive = np.zeros((height, width), dtype=bool)
    for seed in prompt.positive_points():
        region = grow_region(pixels, seed, allowed, cfg)
        if np.count_nonzero(region) > cfg.max_region_fraction * area:
            continue
        positive |= region

    negative = np.zeros((height, width), dtype=bool)
    for seed in prompt.negative_points():
        negative |= grow_region(pixels, seed, allowed, cfg)

    return BinaryMask(positive & ~negative)


def segment_prompt(image: GrayImage, prompt: MaskPrompt, cfg: SegmenterConfig = SegmenterConfig()) -> SegmentResult:
    """segment, with an out-of-bounds prompt reported as an empty mask instead of raised."""
    try:
        mask = segment(image, prompt, cfg)
    except PromptOutOfBounds:
        return SegmentResult(BinaryMask.empty(image.width, image.height), SegmentOutcome.BOUNDS_FAILURE, prompt)
    return SegmentResult(mask, SegmentOutcome.OK, prompt)


def segment_text(
    image: GrayImage,
    text: str,
    stage: PromptStage,
    cfg: SegmenterConfig = SegmenterConfig()
) -> SegmentResult:
    """
    Parse then segment; never raises for bad text or out-of-bounds prompts.

    Returns:
        SegmentResult whose outcome says whether parsing or the bounds check
        failed (mask empty in both cases)
    """
    try:
        prompt = parse(text, stage)
    except FormatError:
        return SegmentResult(BinaryMask.empty(image.width, image.height), SegmentOutcome.FORMAT_FAILURE)
    return segment_prompt(image, prompt, cfg)
