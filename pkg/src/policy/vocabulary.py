"""
Token vocabulary of the prompt policy.

Ids (stable, V = 46):

     0-7    <think> </think> <bbox> </bbox> <points> </points> <labels> </labels>
     8-39   coordinate bins 0-31
    40      ,
    41      ;
    42      L0   (label 0, renders "0")
    43      L1   (label 1, renders "1")
    44      T    (think filler, renders "obj")
    45      EOS  (renders nothing)

Bin k maps to pixel (2k + 1) * dim // 64, the bin centre of a 32-way split of
the axis. In decoded text a bin is an x coordinate or a y coordinate depending
on its position inside <bbox> / <points> (x first, alternating).
"""

from typing import List, Optional, Sequence

from src.prompts.mask_prompt import MaskPrompt

TAGS = ['<think>', '</think>', '<bbox>', '</bbox>', '<points>', '</points>', '<labels>', '</labels>']
NUM_BINS = 32

THINK_OPEN, THINK_CLOSE, BBOX_OPEN, BBOX_CLOSE, POINTS_OPEN, POINTS_CLOSE, LABELS_OPEN, LABELS_CLOSE = range(8)
BIN_OFFSET = len(TAGS)
COMMA = BIN_OFFSET + NUM_BINS
SEMICOLON = COMMA + 1
LABEL_0 = SEMICOLON + 1
LABEL_1 = LABEL_0 + 1
FILLER = LABEL_1 + 1
EOS = FILLER + 1
VOCAB_SIZE = EOS + 1

FILLER_TEXT = 'obj'

TOKEN_NAMES = TAGS + [f"bin{k}" for k in range(NUM_BINS)] + [',', ';', 'L0', 'L1', 'T', 'EOS']


def is_bin(token: int) -> bool:
    return BIN_OFFSET <= token < BIN_OFFSET + NUM_BINS


def bin_token(k: int) -> int:
    if not 0 <= k < NUM_BINS:
        raise ValueError(f"Bin index must lie in [0, {NUM_BINS - 1}], got {k}")
    return BIN_OFFSET + k


def bin_index(token: int) -> int:
    return token - BIN_OFFSET


def bin_to_pixel(k: int, dim: int) -> int:
    """
    Pixel centre of bin k on an axis of `dim` pixels.

    Example:
        >>> bin_to_pixel(3, 64)
        7
    """
    return (2 * k + 1) * dim // (2 * NUM_BINS)


def pixel_to_bin(pixel: int, dim: int) -> int:
    """Bin whose centre is nearest to `pixel` (lowest bin on ties)."""
    best, best_dist = 0, None
    for k in range(NUM_BINS):
        dist = abs(bin_to_pixel(k, dim) - pixel)
        if best_dist is None or dist < best_dist:
            best, best_dist = k, dist
    return best


def check_token(token: int) -> None:
    if not isinstance(token, (int,)) or not 0 <= token < VOCAB_SIZE:
        raise ValueError(f"Invalid token id {token!r} (vocabulary has {VOCAB_SIZE} tokens)")


def decode(tokens: Sequence[int], width: int = 64, height: int = 64) -> str:
    """
    Concatenated surface forms of a token sequence.

    Example:
        >>> decode([0, 44, 1, 4, 11, 40, 11, 5, 6, 43, 7, 45])
        '<think>obj</think><points>7,7</points><labels>1</labels>'
    """
    parts: List[str] = []
    section: Optional[int] = None
    coord_index = 0
    for token in tokens:
        token = int(token)
        check_token(token)
        if token < BIN_OFFSET:
            parts.append(TAGS[token])
            if token in (BBOX_OPEN, POINTS_OPEN):
                section = token
                coord_index = 0
            elif token in (BBOX_CLOSE, POINTS_CLOSE):
                section = None
        elif is_bin(token):
            dim = height if (section is not None and coord_index % 2 == 1) else width
            parts.append(str(bin_to_pixel(bin_index(token), dim)))
            coord_index += 1
        elif token == COMMA:
            parts.append(',')
        elif token == SEMICOLON:
            parts.append(';')
        elif token == LABEL_0:
            parts.append('0')
        elif token == LABEL_1:
            parts.append('1')
        elif token == FILLER:
            parts.append(FILLER_TEXT)
    return ''.join(parts)


def prompt_to_tokens(prompt: MaskPrompt, width: int, height: int, filler_count: int = 1) -> List[int]:
    """
    Token sequence for a prompt, coordinates snapped to their nearest bins,
    think block replaced by `filler_count` filler tokens, ending in EOS.
    """
    tokens = [THINK_OPEN] + [FILLER] * filler_count + [THINK_CLOSE]
    if prompt.bbox is not None:
        x1, y1, x2, y2 = prompt.bbox
        bins = [pixel_to_bin(x1, width), pixel_to_bin(y1, height),
                pixel_to_bin(x2, width), pixel_to_bin(y2, height)]
        tokens.append(BBOX_OPEN)
        for i, k in enumerate(bins):
            if i:
                tokens.append(COMMA)
            tokens.append(bin_token(k))
        tokens.append(BBOX_CLOSE)

    tokens.append(POINTS_OPEN)
    for i, (x, y) in enumerate(prompt.points):
        if i:
            tokens.append(SEMICOLON)
        tokens += [bin_token(pixel_to_bin(x, width)), COMMA, bin_token(pixel_to_bin(y, height))]
    tokens.append(POINTS_CLOSE)

    tokens.append(LABELS_OPEN)
    for i, label in enumerate(prompt.labels):
        if i:
            tokens.append(COMMA)
        tokens.append(LABEL_1 if label == 1 else LABEL_0)
    tokens.append(LABELS_CLOSE)
    tokens.append(EOS)
    return tokens
