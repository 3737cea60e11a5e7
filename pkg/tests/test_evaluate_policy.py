import pytest

from src.pipelines.evaluate_policy import EVAL_COLUMNS, evaluate_policy, predict_masks
from src.policy.grammar import GrammarConstraint
from src.policy.recurrent import PolicyParams
from src.prompts.mask_prompt import PromptStage
from src.segmenter.region_growing import SegmentOutcome

BOX = PromptStage.BOX_AND_POINTS


def test_free_decoding_failures_score_as_empty_masks(salient_scenes):
    evaluation = evaluate_policy(PolicyParams.zeros(), salient_scenes, BOX)
    assert evaluation.parse_rate == 0.0
    assert evaluation.fg_fraction_mean == 0.0
    assert evaluation.near_empty_share == 1.0
    assert evaluation.report.iou == 0.0
    assert evaluation.report.sample_count == len(salient_scenes)


def test_grammar_decoding_always_parses(salient_scenes):
    evaluation = evaluate_policy(PolicyParams.zeros(), salient_scenes, BOX, constraint=GrammarConstraint(BOX))
    assert evaluation.parse_rate == 1.0
    # the zero policy emits a one-pixel box and no points
    assert evaluation.fg_fraction_mean == 0.0
    outcomes = [outcome for _, outcome in
                predict_masks(PolicyParams.zeros(), salient_scenes, BOX, constraint=GrammarConstraint(BOX))]
    assert all(o is SegmentOutcome.OK for o in outcomes)


def test_row_layout(camouflaged_scenes):
    evaluation = evaluate_policy(PolicyParams.init(3, hidden=8), camouflaged_scenes, BOX,
                                 constraint=GrammarConstraint(BOX))
    row = evaluation.to_row()
    assert list(row) == EVAL_COLUMNS
    assert len(evaluation.fg_fractions) == len(camouflaged_scenes)
    assert 0.0 <= row['near_empty_share'] <= 1.0


def test_workers_do_not_change_the_report(camouflaged_scenes):
    policy = PolicyParams.init(7, hidden=8, scale=1.0)
    constraint = GrammarConstraint(BOX)
    one = evaluate_policy(policy, camouflaged_scenes, BOX, constraint=constraint)
    two = evaluate_policy(policy, camouflaged_scenes, BOX, constraint=constraint, workers=2)
    assert one == two


def test_empty_split_is_rejected():
    with pytest.raises(ValueError):
        evaluate_policy(PolicyParams.zeros(), [], BOX)
