import numpy as np
import pytest

from src.policy.recurrent import PolicyParams, TokenSequence, rollout_rng, sample, scene_features
from src.policy.vocabulary import EOS, THINK_OPEN
from src.prompts.mask_prompt import PromptStage
from src.segmenter.region_growing import SegmenterConfig, SegmentOutcome
from src.training.rewards import (
    TRUNCATION_SUFFIX, MetricMode, RewardCache, reward_breakdown, segmentation_reward, sequence_text,
    total_reward,
)
from tests import oracles

BOX = PromptStage.BOX_AND_POINTS
POINTS = PromptStage.POINTS_ONLY
PERFECT = '<think>x</think><bbox>0,0,19,19</bbox><points>9,9</points><labels>1</labels>'


def test_malformed_text_scores_zero(square):
    assert total_reward('<think>', square, BOX) == 0.0
    rb = reward_breakdown('', square, POINTS)
    assert (rb.total, rb.format, rb.segmentation) == (0.0, 0.0, 0.0)
    assert rb.outcome is SegmentOutcome.FORMAT_FAILURE


def test_perfect_mask_scores_two(square):
    rb = reward_breakdown(PERFECT, square, BOX)
    assert rb.iou == 1.0 and rb.s == 1.0
    assert rb.total == pytest.approx(2.0, abs=1e-12)
    assert rb.foreground_fraction == 0.25


def test_empty_mask_scores_format_plus_weighted_s(square):
    text = '<think></think><points></points><labels></labels>'
    expected_s = oracles.s_measure(np.zeros((20, 20)), square.gt.bits)
    rb = reward_breakdown(text, square, POINTS)
    assert rb.iou == 0.0
    assert rb.total == pytest.approx(1.0 + 0.3 * expected_s, abs=1e-12)
    assert rb.foreground_fraction == 0.0


def test_out_of_bounds_prompt_keeps_only_format(square):
    rb = reward_breakdown('<think></think><points>25,3</points><labels>1</labels>', square, POINTS)
    assert rb.outcome is SegmentOutcome.BOUNDS_FAILURE
    assert (rb.total, rb.format, rb.segmentation) == (1.0, 1.0, 0.0)


def test_metric_modes(square):
    text = '<think></think><points>0,0</points><labels>1</labels>'   # grows the background
    iou_only = reward_breakdown(text, square, POINTS, metric_mode=MetricMode.IOU_ONLY)
    s_only = reward_breakdown(text, square, POINTS, metric_mode=MetricMode.S_ONLY)
    combined = reward_breakdown(text, square, POINTS)
    assert iou_only.segmentation == iou_only.iou == 0.0
    assert s_only.segmentation == s_only.s
    assert combined.segmentation == pytest.approx(0.7 * combined.iou + 0.3 * combined.s)
    assert segmentation_reward(0.5, 0.1, MetricMode.COMBINED, (0.5, 0.5)) == pytest.approx(0.3)


def test_metric_mode_names():
    assert MetricMode.from_name('iou') is MetricMode.IOU_ONLY
    assert MetricMode.from_name('S_ONLY') is MetricMode.S_ONLY
    with pytest.raises(KeyError, match='Available modes'):
        MetricMode.from_name('dice')


def test_rewards_stay_in_range_for_sampled_texts(salient_scenes):
    params = PolicyParams.init(4, hidden=8, scale=1.0)
    for scene in salient_scenes:
        features = scene_features(scene.image)
        for i in range(20):
            seq = sample(params, features, rollout_rng(0, i))
            assert 0.0 <= total_reward(sequence_text(seq, scene.width, scene.height), scene, BOX) <= 2.0


def test_truncated_sequences_never_parse(square):
    truncated = TokenSequence(tokens=(THINK_OPEN,), logps=(-1.0,))
    text = sequence_text(truncated, 20, 20)
    assert text == '<think>' + TRUNCATION_SUFFIX
    assert total_reward(text, square, POINTS) == 0.0
    assert sequence_text(TokenSequence((EOS,), (-1.0,)), 20, 20) == ''


def test_reward_cache_reuses_results(square):
    cache = RewardCache(BOX, (0.7, 0.3), MetricMode.COMBINED, SegmenterConfig())
    first = cache(PERFECT, square)
    assert cache(PERFECT, square) is first
    assert cache.hits == 1 and len(cache) == 1
    assert first == reward_breakdown(PERFECT, square, BOX)
