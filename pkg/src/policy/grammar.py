"""
Grammar-guided decoding.

GrammarConstraint(stage, max_points) yields, step by step, the set of tokens
that keep the sequence a prefix of a parseable prompt:

    <think> T{0..max_think} </think>
    [<bbox> b , b , b , b </bbox>]            box stage, x2 >= x1, y2 >= y1
    <points> (b , b (; b , b){0..max_points-1})? </points>
    <labels> one L0/L1 per point, comma separated </labels>
    EOS

The policy applies the mask as a renormalised softmax (disallowed logits are
dropped), for sampling and for log-probabilities alike.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from src.policy.vocabulary import (
    BBOX_CLOSE, BBOX_OPEN, BIN_OFFSET, COMMA, EOS, FILLER, LABEL_0, LABEL_1,
    LABELS_CLOSE, LABELS_OPEN, NUM_BINS, POINTS_CLOSE, POINTS_OPEN, SEMICOLON,
    THINK_CLOSE, THINK_OPEN, VOCAB_SIZE, bin_index, is_bin,
)
from src.prompts.mask_prompt import MAX_POINTS, PromptStage

MAX_SEQUENCE_LENGTH = 96


@lru_cache(maxsize=None)
def _only(*tokens: int) -> np.ndarray:
    mask = np.zeros(VOCAB_SIZE, dtype=bool)
    mask[list(tokens)] = True
    mask.setflags(write=False)
    return mask


@lru_cache(maxsize=None)
def _bins_from(lowest: int = 0, extra=()) -> np.ndarray:
    mask = np.zeros(VOCAB_SIZE, dtype=bool)
    mask[BIN_OFFSET + lowest:BIN_OFFSET + NUM_BINS] = True
    mask[list(extra)] = True
    mask.setflags(write=False)
    return mask


@dataclass(frozen=True)
class GrammarConstraint:
    stage: PromptStage
    max_points: int = 6
    max_think: int = 4

    def __post_init__(self):
        if not 0 <= self.max_points <= MAX_POINTS:
            raise ValueError(f"max_points must lie in [0, {MAX_POINTS}], got {self.max_points}")
        if self.max_think < 0:
            raise ValueError(f"max_think must be non-negative, got {self.max_think}")
        if self.longest_sequence() > MAX_SEQUENCE_LENGTH:
            raise ValueError(
                f"Grammar allows {self.longest_sequence()} tokens, above the "
                f"{MAX_SEQUENCE_LENGTH}-token cap; lower max_points or max_think"
            )

    def longest_sequence(self) -> int:
        n = self.max_points
        think = 2 + self.max_think
        bbox = 9 if self.stage is PromptStage.BOX_AND_POINTS else 0
        points = 2 + (4 * n - 1 if n else 0)
        labels = 2 + (2 * n - 1 if n else 0)
        return think + bbox + points + labels + 1

    def tracker(self) -> "GrammarTracker":
        return GrammarTracker(self)


class GrammarTracker:
    """
    Mutable cursor over one sequence: allowed() then advance(token).

    States are named after the next expected item.
    """

    def __init__(self, constraint: GrammarConstraint):
        self.constraint = constraint
        self.state = 'start'
        self.think_count = 0
        self.box_pos = 0
        self.box_bins = []
        self.point_count = 0
        self.label_count = 0

    def allowed(self) -> np.ndarray:
        c = self.constraint
        state = self.state
        if state == 'start':
            return _only(THINK_OPEN)
        if state == 'think':
            return _only(FILLER, THINK_CLOSE) if self.think_count < c.max_think else _only(THINK_CLOSE)
        if state == 'after_think':
            return _only(BBOX_OPEN) if c.stage is PromptStage.BOX_AND_POINTS else _only(POINTS_OPEN)
        if state == 'bbox':
            pos = self.box_pos
            if pos == 7:
                return _only(BBOX_CLOSE)
            if pos % 2 == 1:
                return _only(COMMA)
            lowest = self.box_bins[pos // 2 - 2] if pos >= 4 else 0
            return _bins_from(lowest)
        if state == 'after_bbox':
            return _only(POINTS_OPEN)
        if state == 'points_open':
            return _bins_from(0, (POINTS_CLOSE,)) if c.max_points > 0 else _only(POINTS_CLOSE)
        if state in ('point_x', 'point_y'):
            return _bins_from(0)
        if state == 'point_comma':
            return _only(COMMA)
        if state == 'point_end':
            if self.point_count < c.max_points:
                return _only(SEMICOLON, POINTS_CLOSE)
            return _only(POINTS_CLOSE)
        if state == 'after_points':
            return _only(LABELS_OPEN)
        if state == 'label':
            return _only(LABEL_0, LABEL_1)
        if state == 'label_end':
            return _only(COMMA) if self.label_count < self.point_count else _only(LABELS_CLOSE)
        if state == 'after_labels':
            return _only(EOS)
        return np.zeros(VOCAB_SIZE, dtype=bool)

    def advance(self, token: int) -> None:
        """
        Consume a token.

        Raises:
            ValueError: If the token is not allowed in the current state
        """
        token = int(token)
        if not self.allowed()[token]:
            raise ValueError(f"Token {token} not allowed by the grammar in state '{self.state}'")

        state = self.state
        if state == 'start':
            self.state = 'think'
        elif state == 'think':
            if token == FILLER:
                self.think_count += 1
            else:
                self.state = 'after_think'
        elif state == 'after_think':
            self.state = 'bbox' if token == BBOX_OPEN else 'points_open'
        elif state == 'bbox':
            if is_bin(token):
                self.box_bins.append(bin_index(token))
            if token == BBOX_CLOSE:
                self.state = 'after_bbox'
            else:
                self.box_pos += 1
        elif state == 'after_bbox':
            self.state = 'points_open'
        elif state in ('points_open', 'point_x'):
            if token == POINTS_CLOSE:
                self.state = 'after_points'
            else:
                self.state = 'point_comma'
        elif state == 'point_comma':
            self.state = 'point_y'
        elif state == 'point_y':
            self.point_count += 1
            self.state = 'point_end'
        elif state == 'point_end':
            self.state = 'point_x' if token == SEMICOLON else 'after_points'
        elif state == 'after_points':
            self.state = 'label' if self.point_count > 0 else 'label_end'
        elif state == 'label':
            self.label_count += 1
            self.state = 'label_end'
        elif state == 'label_end':
            self.state = 'label' if token == COMMA else 'after_labels'
        elif state == 'after_labels':
            self.state = 'done'


def allowed_masks(constraint: Optional[GrammarConstraint], tokens) -> Optional[np.ndarray]:
    """
    Per-step allowed-token masks for a whole sequence, shape (len(tokens), V),
    or None for free decoding.

    Raises:
        ValueError: If some token breaks the grammar
    """
    if constraint is None:
        return None
    tracker = constraint.tracker()
    masks = np.zeros((len(tokens), VOCAB_SIZE), dtype=bool)
    for t, token in enumerate(tokens):
        masks[t] = tracker.allowed()
        tracker.advance(token)
    return masks
