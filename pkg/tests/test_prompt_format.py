import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.prompts.mask_prompt import (
    MAX_COORD, MAX_POINTS, FormatError, FormatErrorCategory, MaskPrompt, PromptStage,
    format_reward, parse, prompt_from_dict, prompt_to_dict, prompt_to_json, serialize,
)
from tests.builders import MUTATIONS, REJECTED_MUTATIONS, mutate_prompt_text, random_prompt_text

BOX = PromptStage.BOX_AND_POINTS
POINTS = PromptStage.POINTS_ONLY

coords = st.one_of(st.integers(min_value=0, max_value=MAX_COORD), st.just(MAX_COORD))
think_text = st.text(alphabet=st.characters(blacklist_characters='<', blacklist_categories=('Cs',)), max_size=30)


@st.composite
def prompts(draw, with_box=None):
    n = draw(st.integers(0, MAX_POINTS))
    points = tuple((draw(coords), draw(coords)) for _ in range(n))
    labels = tuple(draw(st.integers(0, 1)) for _ in range(n))
    if with_box is None:
        with_box = draw(st.booleans())
    bbox = None
    if with_box:
        x1, x2 = sorted((draw(coords), draw(coords)))
        y1, y2 = sorted((draw(coords), draw(coords)))
        bbox = (x1, y1, x2, y2)
    return MaskPrompt(think=draw(think_text), bbox=bbox, points=points, labels=labels)


def _category(text, stage):
    with pytest.raises(FormatError) as info:
        parse(text, stage)
    return info.value.category


def test_box_prompt_example():
    text = '<think>spot the crab</think><bbox>2,3,10,12</bbox><points>5,6;1,1</points><labels>1,0</labels>'
    prompt = parse(text, BOX)
    assert prompt.think == 'spot the crab'
    assert prompt.bbox == (2, 3, 10, 12)
    assert prompt.points == ((5, 6), (1, 1))
    assert prompt.labels == (1, 0)
    assert prompt.positive_points() == [(5, 6)]
    assert prompt.negative_points() == [(1, 1)]


def test_points_only_example():
    prompt = parse('<think>t</think><points>0,0</points><labels>1</labels>', POINTS)
    assert prompt.bbox is None
    assert prompt.points == ((0, 0),)
    assert prompt.labels == (1,)
    assert prompt.stage is POINTS


def test_bytes_are_accepted():
    assert parse(b'<think></think><points></points><labels></labels>', POINTS) == MaskPrompt()


@pytest.mark.parametrize('text, stage, category', [
    ('<think>t</think><points>0,0;1,1</points><labels>1</labels>', POINTS, FormatErrorCategory.LENGTH_MISMATCH),
    ('', POINTS, FormatErrorCategory.MISSING_TAG),
    ('<think>t</think><bbox>1,2,3,4<points></bbox><points></points><labels></labels>', BOX,
     FormatErrorCategory.TAG_ORDER),
    ('<think>t</think><bbox>1,2,3,4', BOX, FormatErrorCategory.MISSING_TAG),
    ('<think>t</think><points></points><bbox>1,2,3,4</bbox><labels></labels>', BOX, FormatErrorCategory.TAG_ORDER),
    ('<think>t</think><points>a,1</points><labels>1</labels>', POINTS, FormatErrorCategory.NUMERIC_PARSE),
    ('<think>t</think><points>1,-1</points><labels>1</labels>', POINTS, FormatErrorCategory.NUMERIC_PARSE),
    ('<think>t</think><points>1, 1</points><labels>1</labels>', POINTS, FormatErrorCategory.NUMERIC_PARSE),
    ('<think>t</think><points>1234567890,1</points><labels>1</labels>', POINTS, FormatErrorCategory.NUMERIC_PARSE),
    ('<think>t</think><points>1,1</points><labels>2</labels>', POINTS, FormatErrorCategory.NUMERIC_PARSE),
    ('<think>t</think><points></points><labels></labels> ', POINTS, FormatErrorCategory.TRAILING_GARBAGE),
    ('<think>t</think><bbox>1,2,3,4</bbox><points></points><labels></labels>', POINTS,
     FormatErrorCategory.BOX_IN_POINTS_ONLY_STAGE),
    ('<think>t</think><bbox>5,2,3,4</bbox><points></points><labels></labels>', BOX, FormatErrorCategory.DEGENERATE_BOX),
])
def test_error_categories(text, stage, category):
    assert _category(text, stage) is category


def test_too_many_points_is_a_length_error():
    body = ';'.join('1,1' for _ in range(MAX_POINTS + 1))
    labels = ','.join('1' for _ in range(MAX_POINTS + 1))
    text = f'<think></think><points>{body}</points><labels>{labels}</labels>'
    assert _category(text, POINTS) is FormatErrorCategory.LENGTH_MISMATCH


def test_serialize_canonical_form():
    prompt = MaskPrompt(points=((0, 0),), labels=(1,))
    assert serialize(prompt) == '<think></think><points>0,0</points><labels>1</labels>'


def test_box_prompt_round_trip():
    prompt = MaskPrompt(think='look left', bbox=(0, 0, 0, 0), points=((3, 4),), labels=(0,))
    assert parse(serialize(prompt), BOX) == prompt


@given(prompts())
def test_round_trip(prompt):
    assert parse(serialize(prompt), prompt.stage) == prompt


def test_widest_coordinates_round_trip():
    prompt = MaskPrompt(bbox=(0, 0, MAX_COORD, MAX_COORD), points=((MAX_COORD, 0),), labels=(1,))
    assert parse(serialize(prompt), BOX) == prompt


def test_coordinates_the_parser_cannot_read_are_refused():
    with pytest.raises(ValueError, match="9 digits"):
        MaskPrompt(points=((MAX_COORD + 1, 0),), labels=(1,))
    with pytest.raises(ValueError, match="9 digits"):
        MaskPrompt(bbox=(0, 0, 1, MAX_COORD + 1))
    with pytest.raises(ValueError):
        prompt_from_dict({"points": [[10 ** 9, 0]], "labels": [1]})


@given(prompts(with_box=True))
def test_json_round_trip(prompt):
    assert prompt_from_dict(prompt_to_dict(prompt)) == prompt
    assert prompt_to_json(prompt).startswith('{"think":')


@given(st.text(max_size=200), st.sampled_from(list(PromptStage)))
def test_format_reward_agrees_with_parse(text, stage):
    try:
        parse(text, stage)
        accepted = True
    except FormatError:
        accepted = False
    assert format_reward(text, stage) == (1.0 if accepted else 0.0)


@given(st.binary(max_size=200))
def test_arbitrary_bytes_never_crash(data):
    assert format_reward(data, POINTS) in (0.0, 1.0)


def test_large_input_is_rejected_cleanly():
    blob = ('<think>' + 'x' * (64 * 1024)).encode()
    assert format_reward(blob, POINTS) == 0.0
    assert format_reward(bytes(range(256)) * 256, BOX) == 0.0


def test_format_reward_examples():
    good = '<think>t</think><bbox>1,1,2,2</bbox><points></points><labels></labels>'
    assert format_reward(good, BOX) == 1.0
    assert format_reward(good.replace('</bbox>', ''), BOX) == 0.0
    assert format_reward('', BOX) == 0.0


def test_prompt_invariants():
    with pytest.raises(ValueError):
        MaskPrompt(think='a<b')
    with pytest.raises(ValueError):
        MaskPrompt(points=((1, 1),), labels=())
    with pytest.raises(ValueError):
        MaskPrompt(points=((1, 1),), labels=(2,))
    with pytest.raises(ValueError):
        MaskPrompt(bbox=(3, 0, 1, 1))
    with pytest.raises(ValueError, match='missing keys'):
        prompt_from_dict({'think': ''})


def test_stage_lookup():
    assert PromptStage.from_name('box') is BOX
    assert PromptStage.from_name('POINTS_ONLY') is POINTS
    with pytest.raises(KeyError, match='Available stages'):
        PromptStage.from_name('boxes')


# --- near-miss corpus ------------------------------------------------------

def _picker(data):
    return lambda n: data.draw(st.integers(0, n - 1))


def _accepted(text, stage):
    try:
        parse(text, stage)
    except FormatError:
        return False
    return True


@settings(max_examples=1000)
@given(prompts(), st.sampled_from(REJECTED_MUTATIONS), st.data())
def test_near_misses_are_rejected(prompt, kind, data):
    text = mutate_prompt_text(serialize(prompt), kind, _picker(data))
    assert format_reward(text, prompt.stage) == 0.0
    with pytest.raises(FormatError):
        parse(text, prompt.stage)


@settings(max_examples=1000)
@given(prompts(), st.sampled_from(MUTATIONS), st.sampled_from(list(PromptStage)), st.data())
def test_format_reward_agrees_with_parse_near_the_grammar(prompt, kind, stage, data):
    text = mutate_prompt_text(serialize(prompt), kind, _picker(data))
    assert format_reward(text, stage) == (1.0 if _accepted(text, stage) else 0.0)


def test_single_character_edits_can_still_parse():
    text = '<think>t</think><points>1,2</points><labels>1</labels>'
    choices = iter([8, 6])  # a second 't' inside the think block
    edited = mutate_prompt_text(text, 'insert_char', lambda n: next(choices))
    assert edited == '<think>tt</think><points>1,2</points><labels>1</labels>'
    assert format_reward(edited, POINTS) == 1.0


@pytest.mark.slow
def test_large_seeded_corpus():
    rng = np.random.default_rng(2024)
    pick = lambda n: int(rng.integers(0, n))
    counts = {0.0: 0, 1.0: 0}
    for i in range(100_000):
        stage = BOX if rng.random() < 0.5 else POINTS
        roll = i % 10
        if roll < 3:
            data = random_prompt_text(rng)
        elif roll < 7:
            data = mutate_prompt_text(random_prompt_text(rng), MUTATIONS[pick(len(MUTATIONS))], pick)
        elif roll < 9:
            size = 64 * 1024 if i % 1000 == 9 else int(rng.integers(0, 256))
            data = rng.integers(0, 256, size=size, dtype=np.uint8).tobytes()
        else:
            # invalid UTF-8 around an otherwise valid prompt
            data = b'\xff' + random_prompt_text(rng).encode() + b'\xc3'
        reward = format_reward(data, stage)
        assert reward == (1.0 if _accepted(data, stage) else 0.0)
        counts[reward] += 1
    assert counts[1.0] > 10_000
    assert counts[0.0] > 50_000
