"""
Tagged mask prompts: grammar, parser, serializer and format reward.

Grammar (no whitespace tolerance):

    <think>TEXT</think>
    <bbox>x1,y1,x2,y2</bbox>            (box stage only)
    <points>x,y;x,y;...</points>        (possibly empty)
    <labels>l,l,...</labels>            (one 0/1 label per point)

TEXT may be empty but may not contain '<'. Coordinates are decimal
non-negative integers of at most 9 digits. Nothing may follow </labels>.

The parser is image-agnostic: coordinates are checked against image bounds by
the segmenter, not here.

Usage:
    from src.prompts.mask_prompt import PromptStage, parse, format_reward

    prompt = parse("<think>t</think><points>0,0</points><labels>1</labels>",
                   PromptStage.POINTS_ONLY)
"""

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple, Union

MAX_POINTS = 16
MAX_DIGITS = 9
MAX_COORD = 10 ** MAX_DIGITS - 1

_NUMBER = rf"[0-9]{{1,{MAX_DIGITS}}}"
_BBOX_RE = re.compile(rf"({_NUMBER}),({_NUMBER}),({_NUMBER}),({_NUMBER})")
_POINT_RE = re.compile(rf"({_NUMBER}),({_NUMBER})")
_LABEL_RE = re.compile(r"[01]")


class PromptStage(Enum):
    """Which sections a prompt must carry."""

    POINTS_ONLY = 'points'
    BOX_AND_POINTS = 'box'

    @classmethod
    def from_name(cls, name: str) -> "PromptStage":
        for stage in cls:
            if stage.value == name or stage.name.lower() == name.lower():
                return stage
        available = ', '.join(s.value for s in cls)
        raise KeyError(f"Unknown prompt stage '{name}'. Available stages: {available}")


class FormatErrorCategory(Enum):
    MISSING_TAG = 'MissingTag'
    TAG_ORDER = 'TagOrder'
    NUMERIC_PARSE = 'NumericParse'
    LENGTH_MISMATCH = 'LengthMismatch'
    TRAILING_GARBAGE = 'TrailingGarbage'
    BOX_IN_POINTS_ONLY_STAGE = 'BoxInPointsOnlyStage'
    DEGENERATE_BOX = 'DegenerateBox'


class FormatError(ValueError):
    """Text does not match the prompt grammar."""

    def __init__(self, category: FormatErrorCategory, detail: str = ""):
        message = category.value if not detail else f"{category.value}: {detail}"
        super().__init__(message)
        self.category = category


@dataclass(frozen=True)
class MaskPrompt:
    """
    Parsed prompt. bbox corners are inclusive; labels are 1 (foreground) or
    0 (background), one per point.
    """

    think: str = ""
    bbox: Optional[Tuple[int, int, int, int]] = None
    points: Tuple[Tuple[int, int], ...] = field(default_factory=tuple)
    labels: Tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        points = tuple((int(x), int(y)) for x, y in self.points)
        labels = tuple(int(l) for l in self.labels)
        bbox = None if self.bbox is None else tuple(int(v) for v in self.bbox)
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'labels', labels)
        object.__setattr__(self, 'bbox', bbox)

        if '<' in self.think:
            raise ValueError("think text may not contain '<'")
        if len(points) != len(labels):
            raise ValueError(f"{len(points)} points but {len(labels)} labels")
        if len(points) > MAX_POINTS:
            raise ValueError(f"At most {MAX_POINTS} points allowed, got {len(points)}")
        if any(l not in (0, 1) for l in labels):
            raise ValueError(f"Labels must be 0 or 1, got {labels}")
        coords = [c for p in points for c in p] + list(bbox or ())
        if any(c < 0 for c in coords):
            raise ValueError("Coordinates must be non-negative")
        if any(c > MAX_COORD for c in coords):
            raise ValueError(f"Coordinates must have at most {MAX_DIGITS} digits")
        if bbox is not None:
            if len(bbox) != 4:
                raise ValueError(f"bbox needs 4 values, got {bbox}")
            x1, y1, x2, y2 = bbox
            if x1 > x2 or y1 > y2:
                raise ValueError(f"Degenerate bbox {bbox}")

    @property
    def stage(self) -> PromptStage:
        return PromptStage.BOX_AND_POINTS if self.bbox is not None else PromptStage.POINTS_ONLY

    def positive_points(self) -> List[Tuple[int, int]]:
        return [p for p, l in zip(self.points, self.labels) if l == 1]

    def negative_points(self) -> List[Tuple[int, int]]:
        return [p for p, l in zip(self.points, self.labels) if l == 0]


def _sections(stage: PromptStage) -> List[str]:
    if stage is PromptStage.BOX_AND_POINTS:
        return ['think', 'bbox', 'points', 'labels']
    return ['think', 'points', 'labels']


def _open(name: str) -> str:
    return f"<{name}>"


def _close(name: str) -> str:
    return f"</{name}>"


def _misplaced(text: str, pos: int, name: str, stage: PromptStage) -> FormatError:
    if stage is PromptStage.POINTS_ONLY and text.startswith('<bbox>', pos):
        return FormatError(FormatErrorCategory.BOX_IN_POINTS_ONLY_STAGE)
    if _open(name) not in text:
        return FormatError(FormatErrorCategory.MISSING_TAG, f"no {_open(name)}")
    return FormatError(FormatErrorCategory.TAG_ORDER, f"expected {_open(name)} at offset {pos}")


def _parse_bbox(payload: str) -> Tuple[int, int, int, int]:
    match = _BBOX_RE.fullmatch(payload)
    if match is None:
        raise FormatError(FormatErrorCategory.NUMERIC_PARSE, f"bad bbox '{payload[:40]}'")
    x1, y1, x2, y2 = (int(g) for g in match.groups())
    if x1 > x2 or y1 > y2:
        raise FormatError(FormatErrorCategory.DEGENERATE_BOX, f"({x1},{y1},{x2},{y2})")
    return x1, y1, x2, y2


def _parse_points(payload: str) -> List[Tuple[int, int]]:
    if payload == "":
        return []
    points = []
    for item in payload.split(';'):
        match = _POINT_RE.fullmatch(item)
        if match is None:
            raise FormatError(FormatErrorCategory.NUMERIC_PARSE, f"bad point '{item[:40]}'")
        points.append((int(match.group(1)), int(match.group(2))))
    return points


def _parse_labels(payload: str) -> List[int]:
    if payload == "":
        return []
    labels = []
    for item in payload.split(','):
        if _LABEL_RE.fullmatch(item) is None:
            raise FormatError(FormatErrorCategory.NUMERIC_PARSE, f"bad label '{item[:40]}'")
        labels.append(int(item))
    return labels


def parse(text: Union[str, bytes], stage: PromptStage) -> MaskPrompt:
    """
    Parse tagged text under the grammar for a stage.

    Args:
        text: Arbitrary input (bytes are decoded as UTF-8 with replacement)
        stage: PromptStage deciding whether a bbox section is required

    Returns:
        MaskPrompt

    Raises:
        FormatError: With the category of the first violation found

    Example:
        >>> parse("<think>t</think><points>0,0</points><labels>1</labels>",
        ...       PromptStage.POINTS_ONLY).points
        ((0, 0),)
    """
    if isinstance(text, bytes):
        text = text.decode('utf-8', errors='replace')

    payloads = {}
    pos = 0
    for name in _sections(stage):
        if not text.startswith(_open(name), pos):
            raise _misplaced(text, pos, name, stage)
        start = pos + len(_open(name))
        end = text.find(_close(name), start)
        if end < 0:
            raise FormatError(FormatErrorCategory.MISSING_TAG, f"no {_close(name)}")
        payload = text[start:end]
        if '<' in payload:
            raise FormatError(FormatErrorCategory.TAG_ORDER, f"tag inside {_open(name)}")
        payloads[name] = payload
        pos = end + len(_close(name))

    if pos != len(text):
        raise FormatError(FormatErrorCategory.TRAILING_GARBAGE, f"{len(text) - pos} characters after </labels>")

    bbox = _parse_bbox(payloads['bbox']) if 'bbox' in payloads else None
    points = _parse_points(payloads['points'])
    labels = _parse_labels(payloads['labels'])
    if len(points) != len(labels):
        raise FormatError(FormatErrorCategory.LENGTH_MISMATCH, f"{len(points)} points vs {len(labels)} labels")
    if len(points) > MAX_POINTS:
        raise FormatError(FormatErrorCategory.LENGTH_MISMATCH, f"{len(points)} points exceeds {MAX_POINTS}")

    return MaskPrompt(think=payloads['think'], bbox=bbox, points=tuple(points), labels=tuple(labels))


def serialize(prompt: MaskPrompt) -> str:
    """Canonical text for a prompt; parse(serialize(p), p.stage) == p."""
    parts = [f"<think>{prompt.think}</think>"]
    if prompt.bbox is not None:
        parts.append("<bbox>" + ','.join(str(v) for v in prompt.bbox) + "</bbox>")
    parts.append("<points>" + ';'.join(f"{x},{y}" for x, y in prompt.points) + "</points>")
    parts.append("<labels>" + ','.join(str(l) for l in prompt.labels) + "</labels>")
    return ''.join(parts)


def format_reward(text: Union[str, bytes], stage: PromptStage) -> float:
    """1.0 if the text parses under the stage grammar, else 0.0."""
    try:
        parse(text, stage)
    except FormatError:
        return 0.0
    return 1.0


def prompt_to_dict(prompt: MaskPrompt) -> dict:
    return {
        'think': prompt.think,
        'bbox': list(prompt.bbox) if prompt.bbox is not None else None,
        'points': [list(p) for p in prompt.points],
        'labels': list(prompt.labels),
    }


def prompt_to_json(prompt: MaskPrompt) -> str:
    """JSON rendering used by the CLI parse subcommand (stable key order)."""
    return json.dumps(prompt_to_dict(prompt), separators=(',', ':'))


def prompt_from_dict(data: dict) -> MaskPrompt:
    """
    Inverse of prompt_to_dict.

    Raises:
        ValueError: If keys are missing or the prompt invariants fail
    """
    missing = [k for k in ('points', 'labels') if k not in data]
    if missing:
        raise ValueError(f"Prompt JSON missing keys: {', '.join(missing)}")
    bbox = data.get('bbox')
    return MaskPrompt(
        think=data.get('think', ""),
        bbox=tuple(bbox) if bbox is not None else None,
        points=tuple(tuple(p) for p in data['points']),
        labels=tuple(data['labels']),
    )
